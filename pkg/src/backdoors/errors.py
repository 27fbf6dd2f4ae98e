"""Exception types shared across the package."""


class BackdoorError(Exception):
    """Base class for all errors raised by this package."""


class DimacsParseError(BackdoorError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CspFormatError(BackdoorError, ValueError):
    pass


class BudgetExceeded(BackdoorError):
    """A configured size or node budget would be exceeded."""


class ClassMismatch(BackdoorError):
    """An instance is not in the class an operation requires.

    ``clause`` names an offending clause (SAT) and ``assignment`` the
    falsifying assignment when the mismatch came from a backdoor check.
    """

    def __init__(self, message, clause=None, assignment=None):
        super().__init__(message)
        self.clause = clause
        self.assignment = assignment


class ClosureError(BackdoorError):
    """A CSP instance is not closed under an operation it was expected to be."""

    def __init__(self, message, constraint=None, assignment=None):
        super().__init__(message)
        self.constraint = constraint
        self.assignment = assignment


class BranchingContractError(BackdoorError):
    """A brancher returned a family violating |B' u Q| <= k or nonemptiness."""


class NoBarrier(BackdoorError):
    pass


class NoObstruction(BackdoorError, ValueError):
    pass
