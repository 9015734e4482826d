"""Digital control of negative-imaginary plants with discrete-time HIGS."""

from .errors import (
    ConfigError,
    DimensionError,
    NIHigsError,
    NonFiniteError,
    NotMinimalError,
    SingularMatrixError,
)
from .higs import HigsParams, HigsState, Mode, check_sani_step, higs_step, in_sector, sani_storage
from .lti import (
    ContinuousModel,
    StateSpaceModel,
    is_minimal,
    make_model,
    plant_step,
    transfer_eval,
    zoh_discretize,
)
from .loop import (
    ClosedLoopTrace,
    DesignReport,
    analyze_trace,
    design_higs,
    lyapunov_w,
    simulate,
    validate_design,
)
from .ni import (
    BilinearCertificate,
    CertificateReport,
    NICertificate,
    SearchExhausted,
    check_bilinear_certificate,
    check_ni_certificate,
    empirical_ni_test,
    find_ni_certificate,
)

__version__ = "0.1.0"
