"""Exception types shared by all weierlab modules."""


class WeierlabError(Exception):
    pass


class DomainError(WeierlabError, ValueError):
    """An input violates an operation's precondition."""


class SingularityError(DomainError):
    pass


class DegenerateError(DomainError):
    pass


class ResourceError(WeierlabError, RuntimeError):
    pass


class StarvationError(ResourceError):
    """Rejection sampling accepted too few draws."""


class ConvergenceError(WeierlabError, RuntimeError):
    pass
