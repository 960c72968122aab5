"""Bootstrap percolation in d dimensions: closure engine, structural checks,
analytic bounds and Monte Carlo estimators."""

from .bounds import BoundInputs, BoundValue, H, exact_I1, iter_exp, slice_bound, threshold_constant
from .dynamics import (
    ClosureResult,
    Family,
    Rule,
    close,
    exact_spanning_probability,
    is_internally_spanned,
    step,
)
from .lattice import Configuration, Region, RngStream, face, make_region, random_fill
from .montecarlo import (
    Estimate,
    ScalingPoint,
    TrialPlan,
    bisect_p_alpha,
    bound_vs_estimate,
    estimate_chi,
    estimate_f,
    estimate_F,
    estimate_I,
    sweep_scaling,
)
from .structure import (
    ComponentSet,
    Implication,
    SliceDecomposition,
    aizenman_lebowitz_decompose,
    center_component_volume,
    check_domination,
    components,
    crossing_in_closure,
    face_growth_check,
    has_component_of_diameter,
    scaffold_events,
    slice_construct,
)

__version__ = "0.1.0"

__all__ = [
    "BoundInputs",
    "BoundValue",
    "ClosureResult",
    "ComponentSet",
    "Configuration",
    "Estimate",
    "Family",
    "H",
    "Implication",
    "Region",
    "RngStream",
    "Rule",
    "ScalingPoint",
    "SliceDecomposition",
    "TrialPlan",
    "aizenman_lebowitz_decompose",
    "bisect_p_alpha",
    "bound_vs_estimate",
    "center_component_volume",
    "check_domination",
    "close",
    "components",
    "crossing_in_closure",
    "estimate_F",
    "estimate_I",
    "estimate_chi",
    "estimate_f",
    "exact_I1",
    "exact_spanning_probability",
    "face",
    "face_growth_check",
    "has_component_of_diameter",
    "is_internally_spanned",
    "iter_exp",
    "slice_bound",
    "make_region",
    "random_fill",
    "scaffold_events",
    "slice_construct",
    "step",
    "sweep_scaling",
    "threshold_constant",
]
