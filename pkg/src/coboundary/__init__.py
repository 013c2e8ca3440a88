"""Exact solutions of the coboundary equation ``f = g∘T − g`` on interval unions."""
from .errors import (
    CoboundaryError,
    DomainMismatchError,
    MalformedCertificateError,
    PreconditionError,
    ResourceLimitError,
    SearchExhaustedError,
    UndefinedPointError,
)
from .exact_solver import pair_positive_negative, solve_step, solve_two_level
from .exchange import (
    IntervalExchange,
    apply,
    canonical_pack,
    compose,
    invert,
    map_set,
    rotation,
    verify_measure_preserving,
)
from .carve import carve_mean_zero, rational_split, shrink_mean_zero, split_half
from .pipeline import decompose_domain, solve_full
from .rational import (
    HybridFunction,
    Interval,
    IntervalSet,
    PiecewiseAffine,
    SampledFunction,
    StepFunction,
    integrate,
    sup_norm,
)
from .rearrange import rearrange_matrix, rearrange_zero_sum
from .tower import base_cycle, build_tower, conditional_expectation, extend_cycle, solve_tower
from .verify import CoboundaryCertificate, VerificationReport, orbit, verify_certificate

__version__ = "0.1.0"
