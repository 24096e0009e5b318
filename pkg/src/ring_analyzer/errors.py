"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class SingularityError(ArithmeticError):
    """Evaluation at (or numerically too close to) a pole."""


class FitError(RuntimeError):
    """A least-squares fit did not settle on a constant."""


class BracketError(RuntimeError):
    """No sign change found where one was expected."""


class LivelockError(RuntimeError):
    """A simulated election exceeded the round guard."""
