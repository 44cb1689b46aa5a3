"""Walker-form pseudo-Riemannian metrics and checks for null parallel distributions."""

__version__ = "0.1.0"

from .corpus import random_walker_data  # noqa: E402
from .expr import Jet2, ScalarField, eval_jet2, parse  # noqa: E402
from .geometry import (  # noqa: E402
    Distribution,
    MetricField,
    christoffel,
    covariant_derivative,
    curvature,
    orthogonal_complement,
    sample_points,
    signature,
)
from .textformat import format_walker, parse_walker, read_walker, write_walker  # noqa: E402
from .verify import VerificationReport, VerifyConfig, run_full_report  # noqa: E402
from .walker import (  # noqa: E402
    PartialFibreMetricAtPoint,
    PartialPairingAtPoint,
    WalkerData,
    adapted_basis,
    assemble,
    canonical_distribution,
    extend_partial_metric,
    extend_partial_pairing,
    metric_parameter_rank,
    mid_dimensional_assemble,
    pairing_parameter_rank,
    perturb_h,
    pp_wave,
    step1_partial_pairing,
    walker_form_check,
    walker_partial_metric,
)

__all__ = [
    "random_walker_data",
    "Jet2",
    "ScalarField",
    "eval_jet2",
    "parse",
    "Distribution",
    "MetricField",
    "christoffel",
    "covariant_derivative",
    "curvature",
    "orthogonal_complement",
    "sample_points",
    "signature",
    "format_walker",
    "parse_walker",
    "read_walker",
    "write_walker",
    "VerificationReport",
    "VerifyConfig",
    "run_full_report",
    "PartialFibreMetricAtPoint",
    "PartialPairingAtPoint",
    "WalkerData",
    "adapted_basis",
    "assemble",
    "canonical_distribution",
    "extend_partial_metric",
    "extend_partial_pairing",
    "metric_parameter_rank",
    "mid_dimensional_assemble",
    "pairing_parameter_rank",
    "perturb_h",
    "pp_wave",
    "step1_partial_pairing",
    "walker_form_check",
    "walker_partial_metric",
]
