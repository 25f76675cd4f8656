"""Asynchronous penalized proximal gradient method on slot-based networks."""

from .certificate import (BoundCertificate, assert_identities, check_bounds,
                          compute_bound_certificate, debug_identities)
from .engine import EngineConfig, Trace, agent_update, run, write_trace_csv
from .params import ParamSchedule, make_params
from .problem import AgentObjective, ConstraintMatrix, ProblemInstance, assemble_problem
from .problems import GraphSpec, gen_lasso, incidence_matrix, market_instance
from .schedule import Schedule, make_schedule, validate_schedule

__version__ = "0.1.0"
