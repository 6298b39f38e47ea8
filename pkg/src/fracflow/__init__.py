"""Mittag-Leffler operator calculus, Morrey-scale norms, and a
memory-kernel pseudospectral solver for superdiffusive (1 < alpha < 2)
semilinear flows with gradient and power nonlinearities, plus the
numerical checks that exercise their provable structure.
"""

from .mlf import DomainError, MLParams, MLValue, ml_eval, ml_neg_axis
from .norms import (
    BallFamily,
    ExponentSet,
    NormSpec,
    exponent_report,
    morrey_norm,
    morrey_norm_argmax,
    sobolev_morrey_norm,
    xbeta_norm,
)
from .solver import (
    InitialData,
    NonContraction,
    Overflow,
    PicardConfig,
    ProblemSpec,
    TimeGrid,
    Trajectory,
    gaussian_bump,
    harmonic_homogeneous,
    homogeneous_radial,
    linear_part,
    solve,
)
from .spectral import (
    Field,
    FileFormatError,
    Grid,
    MultiplierSpec,
    apply_G,
    gradient,
    load_field,
    riesz,
    save_field,
)
from .verify import (
    Report,
    SmoothingSpec,
    build_run,
    check_decay,
    check_decomposition,
    check_mikhlin,
    check_selfsimilarity,
    check_smoothing,
    check_stability,
    check_symmetry,
    extract_profile,
    saturating_profile,
)

__version__ = "0.1.0"
