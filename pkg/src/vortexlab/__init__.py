"""Vanishing-viscosity experiments for 2D incompressible flow with rough vorticity."""

__version__ = "0.1.0"

from .biot_savart import *  # noqa: F401,F403
from .errors import CFLViolation, NonFiniteState, NumericalAbort, StepperMismatch  # noqa: F401
from .fields import *  # noqa: F401,F403
from .initial_data import *  # noqa: F401,F403
from .ns_solver import advance, nonlinear_term, run_forward, step  # noqa: F401
from .renorm import *  # noqa: F401,F403
from .report import dump_json, write_csv  # noqa: F401
from .snapshots import *  # noqa: F401,F403
from .stepping import *  # noqa: F401,F403
from .storage import *  # noqa: F401,F403
from .transport import *  # noqa: F401,F403
from .harness import *  # noqa: F401,F403
