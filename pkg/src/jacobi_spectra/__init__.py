"""Spectral analysis of Jacobi operators.

Densities of the spectral measure are obtained from constant-tail
approximations ``f_n`` built on the orthogonal polynomials ``P_n``, with
finite-window certification of the hypotheses that make ``f_n`` converge,
and two independent oracles (truncation quadrature, continued-fraction
boundary values) for cross-validation.
"""

from .conditions import (
    CheckResult,
    ConditionReport,
    TelescopeTerms,
    certify,
    check_centered,
    check_monotone_dominance,
    density_bracket,
    envelope_stats,
    estimate_q,
    telescope_residual,
    telescope_terms,
    theorem24_check,
)
from .density import (
    DensityGrid,
    ResolventValue,
    cdf_from_density,
    cf_approximant,
    fn_density,
    limit_density,
    resolvent_Rn,
    turan_delta,
)
from .errors import (
    CertificationError,
    ConfigError,
    ImpossibleStateError,
    InconsistencyError,
    ModelError,
    NonConvergenceError,
    NumericFailure,
    PoleError,
    SpectraError,
)
from .oracle import SpectralMeasure, compare_cdfs, empirical_cdf, stieltjes_density, truncate_quadrature
from .recurrence import (
    CoefficientModel,
    PolyPairSequence,
    ScaledReal,
    carleman_sum,
    coeff_at,
    eval_polys,
    wronskian_residual,
)
from .tail import TailKernel, free_density, interval_at, k_boundary, k_complex, kernel_at

__all__ = [name for name in dir() if not name.startswith("_")]
