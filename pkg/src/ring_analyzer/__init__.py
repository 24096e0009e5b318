"""Round and bit complexity of the Itai-Rodeh leader election on anonymous rings.

Exact recurrences for finite rings, their large-ring limits, the full
round-count distribution, optimisation of the candidacy parameter and a
Monte Carlo simulator that cross-checks all of them.
"""
from .asymptotics import *  # noqa: F401,F403
from .distribution import *  # noqa: F401,F403
from .errors import BracketError, DomainError, FitError, LivelockError, SingularityError
from .exact import *  # noqa: F401,F403
from .optimizer import *  # noqa: F401,F403
from .simulator import *  # noqa: F401,F403

from . import asymptotics, distribution, exact, optimizer, simulator

__version__ = "0.1.0"

__all__ = (
    exact.__all__
    + asymptotics.__all__
    + distribution.__all__
    + optimizer.__all__
    + simulator.__all__
    + ["BracketError", "DomainError", "FitError", "LivelockError", "SingularityError"]
)
