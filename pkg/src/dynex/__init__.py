"""dynex: a stock-flow system-dynamics toolkit.

Quantifies a causal-loop description of labor-market exploitation as a
runnable stock-flow model, with distribution-based willingness-to-accept
curves, automated feedback-loop polarity verification, and a scenario lab
for policy experiments such as minimum-wage floors.
"""

from . import expr
from .engine import (
    CompiledModel,
    DelayKind,
    DelayState,
    IntegratorKind,
    RunConfig,
    Trajectory,
    compile_model,
    conservation_probe,
    evaluate_point,
    initial_stocks,
    simulate,
    smooth_response_probe,
    steady_state,
)
from .errors import (
    CalibrationError,
    ConfigError,
    CycleError,
    DomainError,
    DynexError,
    InfeasibleAnchors,
    KeyMismatch,
    NonFiniteDerivative,
    NonFiniteState,
    NotConverged,
    NotInvertible,
    PatternViolation,
    SinkError,
    UnknownColumn,
    UnknownVariable,
    ValidationErrors,
)
from .exploitation import (
    Calibration,
    PatternReport,
    PROBES,
    build_exploitation_model,
    fig2_loops,
    loop_probe,
    reference_operating_point,
)
from .expr import Binary, Call, Constant, Expr, Unary, VarRef
from .csvio import format_csv, write_csv
from .dsl import ParseError, SourceSpan, parse_model, serialize_model
from .loops import (
    Cycle,
    LoopMatch,
    LoopReport,
    MatchReport,
    MatchStatus,
    NamedLoop,
    Polarity,
    classify,
    enumerate_cycles,
    match_named_loops,
)
from .model import (
    AuxDef,
    Finding,
    ModelSpec,
    ParamDef,
    SignedDigraph,
    StockDef,
    ValidationReport,
    evaluation_order,
    signed_graph,
    validate_model,
)
from .scenario import (
    ComparisonRow,
    ComparisonTable,
    Composite,
    GridAxis,
    ParamOverride,
    RangeAxis,
    ScenarioResult,
    SweepOutcome,
    SweepPlan,
    WageFloor,
    compare,
    compute_metrics,
    run_scenario,
    sweep,
)
from .willingness import (
    CurveAnchor,
    LogNormalCdf,
    LogNormalCurveSpec,
    NormalCdf,
    NormalCurveSpec,
    PiecewiseCumulative,
    PointsCurveSpec,
    WillingnessCurve,
    calibrate,
    default_curve,
    default_skewed_curve,
    exploitee_count,
    fraction_willing,
    quantile,
    realize_curve,
)

__version__ = "0.1.0"
