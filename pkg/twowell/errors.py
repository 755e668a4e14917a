from __future__ import annotations


class TwoWellError(Exception):
    """Base class for everything the library raises on purpose."""


class DomainError(TwoWellError, ValueError):
    """Point outside the closure of O, or a derivative requested where it is singular."""


class ThetaError(TwoWellError, ValueError):
    """Malformed volumetric penalty (not convex, negative, bad table)."""


class PreconditionViolated(TwoWellError):
    pass


class ConvergenceFailure(TwoWellError):
    """A bracketed solve did not converge. Existence/uniqueness is proved, so this is a bug."""


class DegenerateDirection(TwoWellError):
    """The image vector driving a rank-one line vanishes; use the degenerate line instead."""


class InadmissibleInput(TwoWellError):
    pass


class BoxTooSmall(TwoWellError):
    pass
