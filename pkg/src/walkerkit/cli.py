"""Command-line front end.

Exit codes: 0 success, 1 input or usage error, 2 a check failed (or, for
``negctrl``, the perturbed metric unexpectedly passed).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space, subspace_angles

from . import __version__
from .corpus import random_walker_data
from .expr import ScalarField
from .geometry import sample_points
from .textformat import WalkerFormatError, format_walker, read_walker
from .verify import JET_TOL, VerifyConfig, run_full_report
from .walker import (
    WalkerData,
    WalkerInvariantError,
    assemble,
    canonical_distribution,
    extend_partial_metric,
    metric_parameter_rank,
    pairing_parameter_rank,
    perturb_h,
    step1_partial_pairing,
    walker_partial_metric,
)

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2
NEGCTRL_MIN_RESIDUAL = 1e-3
NEGCTRL_CHECKS = ("parallel", "orthocomplement_parallel", "curvature_relations")


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    n: int | None = None
    r: int | None = None
    samples: int = 25
    tol: float = JET_TOL
    out: str | None = None
    format: str = "text"
    variants: int = 3

    def validate(self):
        if self.samples < 1:
            raise InputError("--samples must be at least 1")
        if self.n is not None:
            if self.n < 2:
                raise InputError("--n must be at least 2")
            if self.r is None or not 0 <= 2 * self.r <= self.n:
                raise InputError(f"--r must satisfy 0 <= r <= n/2 (n={self.n}, r={self.r})")

    @property
    def verify_config(self) -> VerifyConfig:
        return VerifyConfig(seed=self.seed, samples=self.samples, tol=self.tol)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="64-bit seed for sampling and generation")
    p.add_argument("--samples", type=int, default=25, help="sample points per check")
    p.add_argument("--tol", type=float, default=JET_TOL, help="tolerance for jet-exact identities")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "text"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="walkerkit", description="Walker-form metrics and null parallel distribution checks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write random admissible Walker data")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)

    p = sub.add_parser("verify", help="assemble a Walker file and run every check")
    _common(p)
    p.add_argument("file")

    p = sub.add_parser("extend", help="show the extension freedom for a Walker file")
    _common(p)
    p.add_argument("file")
    p.add_argument("--variants", type=int, default=3, help="number of random free blocks to try")

    p = sub.add_parser("negctrl", help="break condition (ii) and expect verification to fail")
    _common(p)
    p.add_argument("file")
    return parser


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path: str) -> WalkerData:
    try:
        return read_walker(path)
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except WalkerFormatError as exc:
        raise InputError(f"{path}: {exc}") from None


def _render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    lines = []
    for key in sorted(doc):
        value = doc[key]
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def cmd_gen(cfg: RunConfig) -> int:
    cfg.validate()
    data = random_walker_data(np.random.default_rng(cfg.seed), cfg.n, cfg.r)
    _emit(format_walker(data), cfg.out)
    return EXIT_OK


def cmd_verify(path: str, cfg: RunConfig) -> int:
    cfg.validate()
    data = _load(path)
    g = assemble(data, validate=False)
    report = run_full_report(g, canonical_distribution(data.n, data.r), cfg.verify_config)
    _emit(report.to_json() if cfg.format == "json" else report.to_text(), cfg.out)
    return EXIT_OK if report.passed else EXIT_CHECK


def _with_b(data: WalkerData, B: np.ndarray) -> WalkerData:
    n = data.n
    rows = tuple(tuple(ScalarField.constant(float(v), n) for v in row) for row in B)
    return WalkerData(n, data.r, data.A, data.H, rows)


def cmd_extend(path: str, cfg: RunConfig) -> int:
    cfg.validate()
    data = _load(path)
    try:
        data.validate()
    except WalkerInvariantError as exc:
        raise InputError(f"{path}: {exc}") from None
    n, r = data.n, data.r
    g = assemble(data)
    X, _ = sample_points(g, 1, cfg.seed)
    x = X[0]

    pairing, _ = step1_partial_pairing(data, x)
    partial, _ = walker_partial_metric(data, x)
    doc = {
        "n": n,
        "r": r,
        "seed": cfg.seed,
        "pairing_dims": {"k": pairing.k, "l": pairing.l, "m": pairing.m},
        "pairing_free_parameters": pairing_parameter_rank(pairing),
        "klm": pairing.k * pairing.l * pairing.m,
        "step1_count": (n - 2 * r) * r,
        "metric_free_parameters": metric_parameter_rank(partial),
        "fibre_metric_count": r * (r + 1) // 2,
    }

    rng = np.random.default_rng(cfg.seed)
    variants = []
    ok = True
    for t in range(cfg.variants):
        M = np.round(rng.uniform(-2.0, 2.0, size=(r, r)), 2)
        Bfree = np.triu(M) + np.triu(M, 1).T
        G = extend_partial_metric(partial, Bfree)
        P = np.eye(n)[:, :r]
        null_res = float(np.max(np.abs(P.T @ G @ P), initial=0.0))
        comp = null_space(P.T @ G) if r else np.eye(n)
        angle = float(np.max(subspace_angles(comp, np.eye(n)[:, : n - r]), initial=0.0))
        report = run_full_report(assemble(_with_b(data, Bfree)), canonical_distribution(n, r), cfg.verify_config)
        passed = report.passed and null_res <= 1e-12 and angle <= 1e-10 and abs(np.linalg.det(G)) > 0
        ok &= passed
        variants.append({
            "index": t,
            "Bfree": Bfree.tolist(),
            "pointwise_null_residual": null_res,
            "complement_angle": angle,
            "report_passed": report.passed,
            "passed": bool(passed),
        })
    doc["variants"] = variants
    doc["passed"] = bool(ok)
    _emit(_render(doc, cfg.format), cfg.out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_negctrl(path: str, cfg: RunConfig) -> int:
    cfg.validate()
    data = _load(path)
    if data.r == 0 or data.n == 2 * data.r:
        reason = "r = 0" if data.r == 0 else "n = 2r: B may depend on x1 legally"
        doc = {"control": "none", "notice": f"no control available ({reason})", "passed": True}
        _emit(_render(doc, cfg.format), cfg.out)
        return EXIT_OK
    bad = perturb_h(data)
    g = assemble(bad, validate=False)
    report = run_full_report(g, canonical_distribution(data.n, data.r), cfg.verify_config)
    caught = [
        c.name for c in report.checks
        if c.name in NEGCTRL_CHECKS and c.verdict == "fail" and c.max_residual > NEGCTRL_MIN_RESIDUAL
    ]
    doc = {
        "control": "H[1,1] + x1",
        "perturbed": format_walker(bad),
        "failing_checks": report.failing(),
        "caught_by": caught,
        "passed": bool(caught),
        "report": report.to_dict(),
    }
    _emit(_render(doc, cfg.format), cfg.out)
    return EXIT_OK if caught else EXIT_CHECK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(
        seed=args.seed,
        n=getattr(args, "n", None),
        r=getattr(args, "r", None),
        samples=args.samples,
        tol=args.tol,
        out=args.out,
        format=args.format,
        variants=getattr(args, "variants", 3),
    )
    try:
        if args.command == "gen":
            return cmd_gen(cfg)
        if args.command == "verify":
            return cmd_verify(args.file, cfg)
        if args.command == "extend":
            return cmd_extend(args.file, cfg)
        return cmd_negctrl(args.file, cfg)
    except InputError as exc:
        print(f"walkerkit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
