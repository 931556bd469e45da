"""Exception hierarchy. UserError maps to CLI exit code 1, NumericalError to 2."""


class SpecmeshError(Exception):
    pass


class UserError(SpecmeshError):
    """Bad input: malformed files, invalid configuration, contract violations."""


class NumericalError(SpecmeshError):
    """Numerical failure: non-convergence, decomposition breakdown."""


class MeshError(UserError):
    pass


class AssemblyError(UserError):
    pass


class PowerIterationError(NumericalError):
    def __init__(self, message, last_estimate=None):
        super().__init__(message)
        self.last_estimate = last_estimate
