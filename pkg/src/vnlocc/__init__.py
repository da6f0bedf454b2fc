"""LOCC convertibility of pure states relative to finite-dimensional von Neumann algebras."""

from .algebra import (
    Algebra,
    AlgElement,
    Density,
    StdVector,
    act,
    commutant_act,
    densities,
    inner,
    make_algebra,
    modular_conjugation,
    polar_vector,
    trace,
)
from .channels import (
    Branch,
    CPMap,
    Instrument,
    KrausMap,
    OneWayProtocol,
    apply_heisenberg,
    apply_schrodinger,
    bimodule_commutation_defect,
    coarse_grain,
    compose_one_way_right,
    link,
    lo_popescu_transfer,
    pinch_defect,
    validate_instrument,
)
from .convert import (
    birkhoff,
    decide_convertible,
    decide_convertible_abelian,
    mixing_decomposition,
    reduce_to_one_way,
    synthesize_protocol,
    transfer_matrix,
    verify_protocol,
)
from .exceptions import (
    ContractViolation,
    NotConvertibleError,
    SideError,
    UnsupportedError,
    ValidationError,
    VNLoccError,
)
from .monotone import check_monotonicity, entropy_relative_to_trace
from .spectral import StepFunction, integral_to, majorises, singular_value_function

__version__ = "0.1.0"
