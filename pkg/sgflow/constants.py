"""Define constants used in the package."""

from enum import Enum


class BoundaryCondition(str, Enum):
    """Boundary condition of the grid."""

    DIRICHLET = "Dirichlet"
    NEUMANN_MEAN_ZERO = "NeumannMeanZero"


class TripleMode(str, Enum):
    """Which Hilbert space plays the role of H in the Gelfand triple."""

    H1_OVER_L2 = "H1_over_L2"
    L2_OVER_HM1 = "L2_over_Hm1"


class Form(str, Enum):
    """Grid realisation of the drift."""

    DIVERGENCE = "DivergenceForm"
    DIFFUSION = "DiffusionForm"


class GraphKind(str, Enum):
    """Monotone graph catalogue."""

    POWER = "Power"
    LOG_PLASMA = "LogPlasma"
    ARCTAN = "Arctan"
    MINIMAL_SURFACE = "MinimalSurface"
    PLASTIC_SHEAR = "PlasticShear"


class NoiseKind(str, Enum):
    """Noise path kinds."""

    ZERO = "Zero"
    WIENER = "TraceClassWiener"
    POISSON = "CompoundPoisson"


class Modulation(str, Enum):
    """State modulation of a multiplicative diffusion coefficient."""

    CONSTANT = "Constant"
    SATURATING = "Saturating"
    AFFINE_CLIPPED = "AffineClipped"


class Variant(str, Enum):
    """Noise variant of an experiment preset."""

    DETERMINISTIC = "deterministic"
    ADDITIVE = "additive"
    POISSON = "poisson"
    MULTIPLICATIVE = "multiplicative"


# the form fixes the triple
FORM_TRIPLE = {
    Form.DIVERGENCE: TripleMode.H1_OVER_L2,
    Form.DIFFUSION: TripleMode.L2_OVER_HM1,
}

# integer codes handed to the numba kernels
GRAPH_CODE = {
    GraphKind.POWER: 0,
    GraphKind.LOG_PLASMA: 1,
    GraphKind.ARCTAN: 2,
    GraphKind.MINIMAL_SURFACE: 3,
    GraphKind.PLASTIC_SHEAR: 4,
}


class TrajCol:
    """Column names of the trajectory table."""

    K = "k"
    T = "t"
    NORM_H = "norm_H"
    NORM_S = "norm_S"
    ENERGY = "energy"
    THETA = "theta"
    NEWTON_ITERS = "newton_iters"

    cols = [K, T, NORM_H, NORM_S, ENERGY, THETA, NEWTON_ITERS]


class NoiseCol:
    """Column names of the noise dump."""

    K = "k"
    T = "t_k"
    MODE = "mode_index"
    VALUE = "increment_value"

    cols = [K, T, MODE, VALUE]


class ErgodicCol:
    """Column names of the ergodic tables."""

    FUNCTIONAL = "functional_id"
    T = "T"
    ESTIMATE = "estimate"
    STDERR = "stderr"
    N_PATHS = "n_paths"
    R = "R"
    FRACTION = "occupation_fraction"
    MARKOV_BOUND = "markov_bound"
    HOLDS = "holds"

    occupation_cols = [FUNCTIONAL, T, ESTIMATE, STDERR, N_PATHS]
    concentration_cols = [R, FRACTION, STDERR, MARKOV_BOUND, HOLDS]


class PicardCol:
    """Column names of the Picard sweep log."""

    WINDOW = "window"
    SWEEP = "sweep"
    GAP = "gap"
    RATIO = "ratio"

    cols = [WINDOW, SWEEP, GAP, RATIO]


# Newton
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 100
ARMIJO = 1e-4
DELTA_LADDER = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
MAX_HALVINGS = 8

# scalar bisection
BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200

# Picard
PICARD_TOL = 1e-8
PICARD_MAX_SWEEPS = 50
PICARD_MAX_WINDOW = 0.1

# bracket search of the S-bound constant
S_BOUND_MAX_DOUBLINGS = 64

EXTINCTION_THRESHOLD = 1e-10
EXTINCTION_SUSTAIN = 3

# bound on the time-integrated D(T^(3/2)) norm of a noise path, per sqrt(mode)
REGULARITY_BOUND = 1e6

# binary state dump
MAGIC = b"SGFL"
FORMAT_VERSION = 1
HEADER_FORMAT = "<4sIII"

MIN_BATCHES = 8


class FunctionalKind(str, Enum):
    """Bounded Lipschitz test functionals."""

    CONSTANT = "constant"
    COORDINATE = "coordinate"
    CLIPPED_NORM = "clipped_norm"
    BALL = "ball"


class SviCol:
    """Column names of the SVI table."""

    T = "t"
    LHS = "lhs"
    RHS = "rhs"
    MARGIN = "margin"
    STDERR = "stderr"
    SLACK = "slack"
    HOLDS = "holds"

    cols = [T, LHS, RHS, MARGIN, STDERR, SLACK, HOLDS]


# seed offset of pilot runs, disjoint from any main block
PILOT_OFFSET = 1 << 40
SE_FACTOR = 3.0


class Scale(str, Enum):
    """Problem size of the property suites."""

    QUICK = "quick"
    FULL = "full"


class VerifyCol:
    """Column names of the property-suite report."""

    SUITE = "suite"
    CHECK = "check"
    VALUE = "value"
    THRESHOLD = "threshold"
    PASSED = "passed"

    cols = [SUITE, CHECK, VALUE, THRESHOLD, PASSED]
