"""Exception hierarchy shared by every module."""


class QgdError(Exception):
    """Base class for all errors raised by qgdsim."""


class DimensionError(QgdError, ValueError):
    """Operands act on different numbers of qubits or have bad shapes."""


class PreconditionError(QgdError, ValueError):
    """An input violates a documented precondition."""


class DenseLimitError(QgdError):
    """Dense conversion refused because the register is too large."""


class NonHermitianError(PreconditionError):
    """An operator required to be hermitian has imaginary coefficients."""


class DegenerateKernelError(QgdError, ArithmeticError):
    """The iteration operator annihilated the current state."""


class SingularEncodingError(QgdError, ArithmeticError):
    """A ground-state encoding is undefined, e.g. A|b> = 0."""


class InternalConsistencyError(QgdError, RuntimeError):
    """A numerical identity that must hold by construction was violated."""


class UnusableInitialStateError(PreconditionError):
    """The initial state has no overlap with the dominant eigenvector."""


class ConfigError(QgdError, ValueError):
    """Configuration file is missing, malformed or inconsistent."""


class TracelessStateError(QgdError, ArithmeticError):
    """The vectorized state has vanishing trace, so ratios are undefined."""


class NonFiniteLossError(QgdError, ArithmeticError):
    """A variational loss evaluated to nan or inf."""
