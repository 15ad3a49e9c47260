"""Exact finite-horizon combinatorics of slaloms and the set algebras,
measures, chain conditions, and poset maps built from them."""

from .slaloms import (
    AlmostVerdict,
    GeometricTail,
    IdealVerdict,
    PathReal,
    Slalom,
    Status,
    almost_subset,
    cell_to_nat,
    classify,
    diagonal_real,
    graph_of,
    localizes,
    nat_to_cell,
    union,
)
from .omega import (
    AlgebraTerm,
    OmegaPoint,
    PiBaseElement,
    SetGen,
    WindowGen,
    canonicalize,
    count_meet_points,
    enum_omega,
    eval_term,
    fact_check,
    meet_infinitude,
    member,
    pibase_enum,
)
from .measure import (
    MeasureValue,
    SlalomName,
    borel_cantelli_bound,
    containment_measure,
    delta_compare,
    destructibility_certificate,
    level_factor,
    majority_extract,
    mu,
    nu,
    term_measure,
)

__version__ = "0.1.0"
