"""Distortion-weighted norm spaces of random vectors on finite probability spaces."""

from .distortion import AvarSpectrum, Constant, Distortion, Log, Power, Step, from_sample, parse
from .dual_norm import (
    CertificateError,
    DualityCertificate,
    avar,
    avar_superset,
    dual_certificate,
    dual_contraction_under_coarsening,
    dual_norm,
    dual_norm_inf,
    dual_norm_q,
    pairing,
    sigma_dominates,
    vector_dual_norm,
)
from .envelope import EnvelopeError, build_G, concave_majorant, extract_H
from .prob_core import (
    FiniteSpace,
    Partition,
    RandomVector,
    SlotCoupling,
    StepQuantile,
    ValidationError,
    coarsen,
    comonotone_slots,
    expectation,
    p_norm,
    quantile,
)
from .risk import bound_chain, lipschitz_check, rho_assignment, rho_scalar
from .sigma_norm import compare_p, holder_bound, norm, norm_via_coupling, parallelogram_residual

__version__ = "0.1.0"
