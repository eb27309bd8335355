from typing import Optional


class WsacsException(Exception):
    pass


class ConfigurationError(WsacsException, ValueError):
    pass


class DomainError(WsacsException, ValueError):
    pass


class PreconditionError(WsacsException, ValueError):
    pass


class NumericalError(WsacsException, ArithmeticError):
    frequency: Optional[float]
    details: str

    def __init__(self, message: str, frequency: Optional[float] = None, details: str = ""):
        super().__init__(message)
        self.frequency = frequency
        self.details = details


class PrecisionError(NumericalError):
    pass


class ResourceError(WsacsException, RuntimeError):
    p_n: Optional[int]
    cost: Optional[int]
    advisory: str

    def __init__(
        self,
        message: str,
        p_n: Optional[int] = None,
        cost: Optional[int] = None,
        advisory: str = "",
    ):
        super().__init__(message)
        self.p_n = p_n
        self.cost = cost
        self.advisory = advisory
