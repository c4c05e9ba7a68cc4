"""Cauchy-transform machinery for the dbar equation on products of planar
domains, with Hölder-regularity measurement tools."""

__version__ = "0.1.0"

from .config import DEFAULT, SolverConfig
from .geometry import (
    AreaQuadrature,
    BoundaryQuadrature,
    GeometryError,
    JordanCurve,
    PlanarDomain,
    ProductDomain,
    chord_arc_constant,
    domain_from_description,
    make_annulus,
    make_bidisc,
    make_disc,
    make_ellipse,
    make_perturbed_circle,
    make_tridisc,
)
from .cauchy import (
    EvaluationError,
    ScalarField1D,
    cauchy_green_residual,
    cauchy_T1,
    constant_field,
    fd_dbar,
    fd_dz,
    integral_S,
    plemelj_boundary_value,
    transform_T,
)
from .product import (
    PolyN,
    ScalarFieldN,
    SolutionField,
    ZeroOneForm,
    check_closed,
    constant_form,
    dzbar_of_monomial,
    operator_equality_gap,
    polynomial_form,
    random_polynomial_form,
    residual,
    slice_S,
    slice_T,
    solve,
    solve_fp,
)
from .holder import (
    HolderEstimate,
    Mollifier,
    SampleCloud,
    cloud_from_csv,
    cloud_on_interval,
    cloud_on_product,
    cloud_to_csv,
    exponent_fit,
    holder_norm,
    mollifier_convergence_curve,
    mollifier_counterexample_gap,
    per_variable_seminorm,
    ramp_moment,
    seminorm,
    with_extra_pairs,
)
from .counterexamples import (
    closed_form_w,
    contour_functional,
    divergence_flagged,
    divergence_quotients,
    fit_w_exponent,
    log_branch,
    no_gain_report,
    power_branch,
    power_form,
    power_log_form,
)
