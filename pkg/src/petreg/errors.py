"""Exception types shared across the package."""


class PetregError(Exception):
    """Base class for all errors raised by petreg."""


class InvalidInputError(PetregError, ValueError):
    """Argument has the wrong shape, sign, or contains non-finite entries."""


class NoSolutionError(PetregError, ArithmeticError):
    """A linear matrix equation has no unique solution."""


class PreconditionError(PetregError, ValueError):
    """A structural assumption (Hurwitz, spanning tree, ...) does not hold."""


class InfeasibleParametersError(PetregError, ValueError):
    """Bound parameters make a denominator in the error-bound chain non-positive."""


class DivergenceError(PetregError, RuntimeError):
    """Simulation state blew up."""

    def __init__(self, t, norm):
        super().__init__(f"state norm {norm:.3e} exceeded divergence guard at t={t:.6f} s")
        self.t = t
        self.norm = norm


class ScenarioError(PetregError, ValueError):
    """Scenario document failed validation; ``path`` names the offending key."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message
