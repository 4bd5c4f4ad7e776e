"""gevreylab: formal solutions of nonlinear moment PDEs and their Gevrey order."""
from ._arith import EXACT, FLOAT
from .moments import MomentSequence, NonRegularMomentError
from .series import TSeries, XSeries, moment_dx, moment_dx_multi, sup_majorant
from .equation import (
    Coefficient,
    Diagnostic,
    EquationSpec,
    Inhomogeneity,
    InitialDatum,
    SpecError,
    Term,
    TermFactor,
    load,
    save,
    spec_hash,
    validate,
)
from .polygon import NewtonPolygon, build, check_slope_inequality, hull_csv
from .eqdsl import DslError, parse, print_spec
from .analysis import (
    check_combinatorial_lemmas,
    GevreyEstimate,
    NagumoIndex,
    check_lower_bound,
    check_norm_properties,
    estimate_gevrey,
    nagumo_norm,
    theta_coeff,
)
from .solver import (
    Counterexample,
    MajorantRun,
    Solution,
    SolveError,
    SolveRequest,
    build_counterexample,
    check_majorant,
    majorant_sequence,
    solve,
)

__version__ = "0.1.0"
