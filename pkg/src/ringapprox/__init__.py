"""Best-approximation studies on self-similar ring meshes of curved elements."""

from .poly import MonomialIndex, Poly2, compose_with_map, reparam_to_cell, scale_physical
from .numkernel import QuadratureRule, gauss_legendre, lstsq_psd, real_eigen_small, solve_spd
from .geometry import (
    CapKind,
    CapSpec,
    Cell,
    ElementMap,
    MeshLevel,
    RingSpec,
    build_mesh,
    build_tensor_mesh,
    cell_map,
    jacobian,
    make_sb1,
    make_sb2,
    mesh_to_json,
)
from .subdivision import (
    CharacteristicRing,
    Scheme,
    SchemeId,
    characteristic_ring,
    coons_cap,
    subdivision_matrix,
    subdominant_lambda,
)
from .reproduction import (
    ReproductionReport,
    maximizing_monomials,
    min_reproduction_degree,
    reproduction_degree,
)
from .approx import (
    ErrorReport,
    TargetFunction,
    best_error_seminorm,
    default_quad_order,
    linf_proxy,
    mesh_error,
    project_l2_cell,
    report_to_csv,
    seminorm_on_element,
)
from .rates import BoundPrediction, RateReport, observed_rates, predict_bounds, summary_tables

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
