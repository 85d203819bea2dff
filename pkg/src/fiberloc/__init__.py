"""fiberloc: stochastic localization on holomorphic zero sets and
Gaussian measures of their tubular neighborhoods."""

from .errors import (
    DomainError,
    PathAbort,
    ProjectionError,
    SingularityError,
    StateError,
    ValidationError,
)
from .gaussgeom import (
    BoundedExp,
    CircledGeometry,
    DiscSpec,
    HalfSpace,
    One,
    SqNorm,
    TiltCheck,
    affine_tube_measure,
    circled_norm_geometry,
    disc_measure,
    gaussian_expectation,
    tilt_inequality_check,
)
from .linalg import (
    hermitian_eig,
    hermitianize,
    log_det,
    proj_with_kernel,
    psd_inv_sqrt,
    psd_sqrt,
)
from .localize import (
    BatchResult,
    ComplexGaussian,
    LocalizationState,
    QuadraticPotential,
    brownian_increment,
    path_rng,
    potential_eval,
    run_path,
    run_paths,
    sigma_of_state,
    standard_gaussian,
    standard_potential,
    step,
    terminal_gaussian,
)
from .mc import (
    CenterLawResult,
    MixtureReport,
    TubeEstimate,
    WaistResult,
    center_law_sample,
    confidence_interval,
    estimate_tube_measure,
    fiber_distances,
    mixture_check,
    waist_check,
)
from .polymap import (
    DistanceResult,
    FiberPoint,
    PolynomialMap,
    affine_map,
    distance_to_origin,
    eval_jacobian,
    eval_map,
    gradient_subspace,
    hyperbola_map,
    paraboloid_map,
    project_to_fiber,
)

__version__ = "0.1.0"
