"""Numerical laboratory for graphs of random vector-valued Weierstrass functions."""
from .errors import (ConvergenceError, DegenerateError, DomainError,
                     ResourceError, SingularityError, StarvationError,
                     WeierlabError)
from .phases import PhaseSeq, Role, sample_phases
from .series import (EvalRequest, WParams, eval_raw, eval_scalar_classic,
                     evaluate, evaluate_at, holder_constant, make_params,
                     truncation_order)

__version__ = "0.1.0"
