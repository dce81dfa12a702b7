"""Exception hierarchy shared by the compiler and the simulator."""


class NBDSError(Exception):
    """Base class for every error raised by this package."""


class ParseError(NBDSError):
    def __init__(self, line, col, message):
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"line {line}, col {col}: {message}")


class ValidationError(NBDSError):
    pass


class LoweringError(NBDSError):
    pass


class DenominatorUnderflow(NBDSError):
    """The I_Cin divider denominator fell below the valid operating floor."""


class OutOfRange(NBDSError):
    pass


class NonFinite(NBDSError):
    def __init__(self, t, state=None):
        self.t = t
        self.state = state
        super().__init__(f"non-finite state at t={t:.9g} s")


class NoOscillation(NBDSError):
    pass
