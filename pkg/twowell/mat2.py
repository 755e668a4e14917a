from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Tuple

import numpy as np

from .errors import DomainError, PreconditionViolated

SQRT1_2 = math.sqrt(0.5)

# v = (1, 1)/sqrt2, w = (1, -1)/sqrt2
V = np.array([SQRT1_2, SQRT1_2])
W = np.array([SQRT1_2, -SQRT1_2])

# |Fv| <= NULL_TOL * max(1, |F|) counts as Fv = 0
NULL_TOL = 1e-10


class Direction(str, enum.Enum):
    """Which coordinate a rank-one line moves."""

    RAISE_Y = "raise_y"  # F(I + t v(x)w): x, d fixed
    RAISE_X = "raise_x"  # F(I + t w(x)v): y, d fixed

    def moved(self, c: "Coords") -> float:
        return c.y if self is Direction.RAISE_Y else c.x


@dataclass(frozen=True)
class Coords:
    x: float
    y: float
    d: float

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.d)

    def scale(self) -> float:
        return max(1.0, self.x * self.x + self.y * self.y + abs(self.d))

    def is_admissible(self, tol: float = 1e-12) -> bool:
        # closure of O, up to rounding
        if self.x < 0 or self.y < 0:
            return False
        return self.x * self.y >= abs(self.d) - tol * self.scale()


@dataclass(frozen=True)
class SignedSingularValues:
    lam1: float
    lam2: float


def as_mat2(values: Any) -> np.ndarray:
    """2x2 array-like or 4 numbers (row-major) -> float64 (2, 2) array."""
    try:
        a = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise DomainError(f"not a 2x2 matrix: {values!r}") from e
    if a.shape == (4,):
        a = a.reshape(2, 2)
    if a.shape != (2, 2):
        raise DomainError(f"expected a 2x2 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix entries must be finite")
    return a


def det(F: np.ndarray) -> float:
    return float(F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0])


def frob2(F: np.ndarray) -> float:
    return float(F[0, 0] ** 2 + F[0, 1] ** 2 + F[1, 0] ** 2 + F[1, 1] ** 2)


def coords(F: np.ndarray) -> Coords:
    """(|Fv|, |Fw|, det F)."""
    a, b = float(F[0, 0]), float(F[0, 1])
    c, e = float(F[1, 0]), float(F[1, 1])
    x = math.hypot(a + b, c + e) * SQRT1_2
    y = math.hypot(a - b, c - e) * SQRT1_2
    return Coords(x, y, a * e - b * c)


def fv_dot_fw(F: np.ndarray) -> float:
    return float(np.dot(F @ V, F @ W))


def signed_singular_values(F: np.ndarray) -> SignedSingularValues:
    # lam2 +- lam1 = sqrt(|F|^2 +- 2 det F)
    n2 = frob2(F)
    dt = det(F)
    s_plus = math.sqrt(max(n2 + 2.0 * dt, 0.0))
    s_minus = math.sqrt(max(n2 - 2.0 * dt, 0.0))
    return SignedSingularValues(lam1=0.5 * (s_plus - s_minus), lam2=0.5 * (s_plus + s_minus))


def image_vector(F: np.ndarray, direction: Direction) -> np.ndarray:
    """The vector added to the moving image along the line: Fv for RAISE_Y, Fw for RAISE_X."""
    return F @ V if direction is Direction.RAISE_Y else F @ W


def rank_one_line(F: np.ndarray, direction: Direction, t: float) -> np.ndarray:
    """F(I + t v(x)w) for RAISE_Y, F(I + t w(x)v) for RAISE_X."""
    if direction is Direction.RAISE_Y:
        return F + t * np.outer(F @ V, W)
    return F + t * np.outer(F @ W, V)


def is_null(F: np.ndarray, vec: np.ndarray) -> bool:
    scale = max(1.0, math.sqrt(frob2(F)))
    return float(np.linalg.norm(vec)) <= NULL_TOL * scale


def degenerate_line(F: np.ndarray, direction: Direction, t: float) -> np.ndarray:
    """F + t w(x)w (RAISE_Y, needs Fv = 0) or F + t v(x)v (RAISE_X, needs Fw = 0)."""
    if direction is Direction.RAISE_Y:
        if not is_null(F, F @ V):
            raise PreconditionViolated("degenerate RAISE_Y line needs Fv = 0")
        return F + t * np.outer(W, W)
    if not is_null(F, F @ W):
        raise PreconditionViolated("degenerate RAISE_X line needs Fw = 0")
    return F + t * np.outer(V, V)
