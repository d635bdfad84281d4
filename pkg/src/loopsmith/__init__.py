"""loopsmith: a description language and reasoning engine for industrial control loops.

Industrial domains are declared as ontology schemas (properties, estimator
models, component classes, translation rules) with an agent repository of
session-typed protocol templates.  Processes instantiate a domain into a
knowledge graph; the engine translates them into state estimation graphs,
enumerates estimation trees for a target state, instantiates agent templates
into control-loop configurations, and certifies liveness by composing the
configuration into a global protocol.
"""

from .configure import ControlLoopConfig, configure
from .diagnostics import Diagnostic, LangError, SourcePos
from .domain import (
    AgentTemplate,
    ClassKind,
    ComponentClass,
    EstimatorDef,
    IndustrialDomain,
    PropertyDef,
    Repository,
    TemplateKind,
    TranslationRule,
    lookup_template,
    validate_domain,
    validate_repository,
)
from .estimation import (
    EstimationTree,
    EstimatorNode,
    SensingNode,
    StateEstimationGraph,
    StateNode,
    translate,
    traverse,
)
from .interp import SessionEnv, TreeForest, run_source
from .parser import parse_expression, parse_program
from .process import ComponentInstance, Device, ProcessGraph, SensingPoint, remove_device
from .protocols import (
    Action,
    Direction,
    GChoice,
    GEnd,
    GEND,
    GlobalProtocol,
    GPass,
    GRec,
    GVar,
    LChoice,
    LEnd,
    END,
    LocalProtocol,
    LPrefix,
    LRec,
    LVar,
    global_participants,
    head_actions,
    is_closed,
    local_step,
    participants,
    prefix_chain,
    receive,
    rename_participants,
    send,
    size,
    sort_branches,
    substitute,
)
from .sessions import (
    CheckResult,
    CommAction,
    CompositionError,
    LocalConfiguration,
    Outcome,
    ProjectionError,
    active_participants,
    comm_step,
    compose,
    compose_with_steps,
    config_size,
    configs_equal_up_to_branch_order,
    enabled,
    is_deadlock_free,
    is_live,
    project,
    rename_configuration,
)
from .sim import (
    PlantState,
    Scenario,
    Signal,
    control_decision,
    estimate_level,
    parse_scenario,
    plant_step,
    run_scenario,
)

__version__ = "0.1.0"
