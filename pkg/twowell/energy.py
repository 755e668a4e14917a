from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, ThetaError
from .mat2 import Coords, det, frob2
from .settings import settings

# tiny negative radicands (>= -RADICAND_TOL * scale) are rounding, clamp to 0
RADICAND_TOL = 1e-12


@dataclass(frozen=True)
class WellParams:
    """Wells SO(2)U1 u SO(2)U2 with U1 = diag(lam, 1/lam), U2 = diag(1/lam, lam)."""

    lam: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.lam) or self.lam <= 1.0:
            raise DomainError(f"lambda must be a finite number > 1, got {self.lam}")

    @property
    def L(self) -> float:
        return self.lam ** 2 + self.lam ** -2

    @property
    def M(self) -> float:
        return self.lam ** 2 - self.lam ** -2

    @property
    def U1(self) -> np.ndarray:
        return np.diag([self.lam, 1.0 / self.lam])

    @property
    def U2(self) -> np.ndarray:
        return np.diag([1.0 / self.lam, self.lam])

    @property
    def well_coord(self) -> float:
        """x = y of every well matrix: sqrt(L/2)."""
        return math.sqrt(0.5 * self.L)


class ThetaVariant(str, enum.Enum):
    ZERO = "zero"
    INDICATOR_DET_ONE = "indicator_det1"
    LOG_SQUARED = "log_squared"
    TABLE_CONVEX = "table"


@dataclass(frozen=True)
class ThetaSpec:
    """Convex, lower semicontinuous theta: R -> [0, inf].

    TABLE_CONVEX is piecewise linear through (knots, values). Outside
    [knots[0], knots[-1]] it is +inf unless extend_left / extend_right
    continue the end segment linearly (allowed only when that keeps the
    values nonnegative).
    """

    variant: ThetaVariant = ThetaVariant.ZERO
    knots: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()
    extend_left: bool = False
    extend_right: bool = False
    det_tol: float = settings.DET_TOL

    def __post_init__(self) -> None:
        if self.variant is ThetaVariant.TABLE_CONVEX:
            _check_table(self)

    @classmethod
    def zero(cls) -> "ThetaSpec":
        return cls(ThetaVariant.ZERO)

    @classmethod
    def indicator_det_one(cls, tol: Optional[float] = None) -> "ThetaSpec":
        return cls(ThetaVariant.INDICATOR_DET_ONE, det_tol=settings.DET_TOL if tol is None else tol)

    @classmethod
    def log_squared(cls) -> "ThetaSpec":
        return cls(ThetaVariant.LOG_SQUARED)

    @classmethod
    def table(
        cls,
        knots: Sequence[float],
        values: Sequence[float],
        extend_left: bool = False,
        extend_right: bool = False,
    ) -> "ThetaSpec":
        return cls(
            ThetaVariant.TABLE_CONVEX,
            knots=tuple(float(k) for k in knots),
            values=tuple(float(v) for v in values),
            extend_left=extend_left,
            extend_right=extend_right,
        )

    @property
    def name(self) -> str:
        if self.variant is not ThetaVariant.TABLE_CONVEX:
            return self.variant.value
        return "table:" + ",".join(f"{k!r}={v!r}" for k, v in zip(self.knots, self.values))


def _slopes(knots: Sequence[float], values: Sequence[float]) -> np.ndarray:
    return np.diff(np.asarray(values)) / np.diff(np.asarray(knots))


def _check_table(spec: ThetaSpec) -> None:
    k, v = spec.knots, spec.values
    if not k or len(k) != len(v):
        raise ThetaError("table theta needs matching, nonempty knots and values")
    if not all(math.isfinite(t) for t in k + v):
        raise ThetaError("table knots/values must be finite")
    if any(val < 0 for val in v):
        raise ThetaError("theta takes values in [0, inf]")
    if any(b <= a for a, b in zip(k, k[1:])):
        raise ThetaError("table knots must be strictly increasing")
    if (spec.extend_left or spec.extend_right) and len(k) < 2:
        raise ThetaError("extension needs at least two knots")
    s = _slopes(k, v) if len(k) > 1 else np.zeros(0)
    if np.any(np.diff(s) < -1e-12 * np.maximum(1.0, np.abs(s[1:]))):
        raise ThetaError("table theta is not convex (slopes must be nondecreasing)")
    if spec.extend_left and s[0] > 0:
        raise ThetaError("extend_left with a positive slope would go negative")
    if spec.extend_right and s[-1] < 0:
        raise ThetaError("extend_right with a negative slope would go negative")


def parse_theta(name: str) -> ThetaSpec:
    """'zero' | 'indicator_det1' | 'log_squared' | 'table:t0=v0,t1=v1,...'"""
    s = (name or "").strip().lower()
    if s in ("zero", "0", "none"):
        return ThetaSpec.zero()
    if s in ("indicator_det1", "indicator", "incompressible"):
        return ThetaSpec.indicator_det_one()
    if s in ("log_squared", "log2", "logsq"):
        return ThetaSpec.log_squared()
    if s.startswith("table:"):
        knots, values = [], []
        for part in s[len("table:"):].split(","):
            if not part.strip():
                continue
            try:
                t, val = part.split("=", 1)
                knots.append(float(t))
                values.append(float(val))
            except ValueError as e:
                raise ThetaError(f"bad table entry {part!r}") from e
        return ThetaSpec.table(knots, values)
    raise ThetaError(f"unknown theta {name!r}")


def theta_eval(spec: ThetaSpec, t: float) -> float:
    v = spec.variant
    if v is ThetaVariant.ZERO:
        return 0.0
    if v is ThetaVariant.INDICATOR_DET_ONE:
        return 0.0 if abs(t - 1.0) <= spec.det_tol else math.inf
    if v is ThetaVariant.LOG_SQUARED:
        return math.log(t) ** 2 if t > 0 else math.inf

    k, vals = spec.knots, spec.values
    if t < k[0]:
        if not spec.extend_left:
            return math.inf
        return vals[0] + (vals[1] - vals[0]) / (k[1] - k[0]) * (t - k[0])
    if t > k[-1]:
        if not spec.extend_right:
            return math.inf
        return vals[-1] + (vals[-1] - vals[-2]) / (k[-1] - k[-2]) * (t - k[-1])
    return float(np.interp(t, k, vals))


# ---------- wells ----------

def dist2_two_wells(F: np.ndarray, p: WellParams) -> float:
    """min_i min_Q |F - QU_i|^2 = |F|^2 + L - 2 max_i sqrt(|FU_i|^2 + 2 det F)."""
    lam2, ilam2 = p.lam ** 2, p.lam ** -2
    col1 = float(F[0, 0] ** 2 + F[1, 0] ** 2)
    col2 = float(F[0, 1] ** 2 + F[1, 1] ** 2)
    dt2 = 2.0 * det(F)
    r1 = max(lam2 * col1 + ilam2 * col2 + dt2, 0.0)
    r2 = max(ilam2 * col1 + lam2 * col2 + dt2, 0.0)
    return max(frob2(F) + p.L - 2.0 * math.sqrt(max(r1, r2)), 0.0)


def w_eval(F: np.ndarray, p: WellParams, th: ThetaSpec) -> float:
    th_val = theta_eval(th, det(F))
    if math.isinf(th_val):
        return math.inf
    return dist2_two_wells(F, p) + th_val


# ---------- A, g and derivatives on the closure of O ----------

def z_of(c: Coords) -> float:
    """sqrt(x^2 y^2 - d^2); DomainError below the hyperbola beyond rounding."""
    xy2 = (c.x * c.y) ** 2
    d2 = c.d * c.d
    rad = xy2 - d2
    if c.x < 0 or c.y < 0 or rad < -RADICAND_TOL * max(1.0, xy2 + d2):
        raise DomainError(f"coords outside the closure of O: {c.as_tuple()}")
    return math.sqrt(max(rad, 0.0))


def a_eval(c: Coords, p: WellParams) -> float:
    z = z_of(c)
    return max(0.5 * (c.x ** 2 + c.y ** 2) * p.L + p.M * z + 2.0 * c.d, 0.0)


def g_eval(c: Coords, p: WellParams) -> float:
    # g is a squared distance; negative values are rounding
    return max(c.x ** 2 + c.y ** 2 + p.L - 2.0 * math.sqrt(a_eval(c, p)), 0.0)


def g_values(x: np.ndarray, y: np.ndarray, d, p: WellParams) -> np.ndarray:
    """Vectorized g over arrays of admissible points (rounding radicands clamped)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.sqrt(np.maximum((x * y) ** 2 - np.square(d), 0.0))
    a = np.maximum(0.5 * (x ** 2 + y ** 2) * p.L + p.M * z + 2.0 * np.asarray(d), 0.0)
    return np.maximum(x ** 2 + y ** 2 + p.L - 2.0 * np.sqrt(a), 0.0)


def _interior_z(c: Coords) -> float:
    z = z_of(c)
    if z <= 0.0:
        raise DomainError(f"derivatives of g are singular on xy = |d|: {c.as_tuple()}")
    return z


def a_gradient(c: Coords, p: WellParams) -> np.ndarray:
    z = _interior_z(c)
    x, y, d = c.as_tuple()
    return np.array([
        x * p.L + p.M * x * y * y / z,
        y * p.L + p.M * y * x * x / z,
        2.0 - p.M * d / z,
    ])


def g_gradient(c: Coords, p: WellParams) -> Tuple[float, float, float]:
    """(d_x g, d_y g, d_d g) = D(x^2 + y^2) - DA/sqrt(A), interior of O only."""
    da = a_gradient(c, p)
    sq = math.sqrt(a_eval(c, p))
    return (2.0 * c.x - da[0] / sq, 2.0 * c.y - da[1] / sq, -da[2] / sq)


def rank_deficient_term(c: Coords) -> np.ndarray:
    """The singular 3x3 matrix S with D^2A = diag(A_x/x, A_y/y, 0) - M S / z^3."""
    x, y, d = c.as_tuple()
    return np.array([
        [x * x * y ** 4, 2 * d * d * x * y - x ** 3 * y ** 3, -d * x * y * y],
        [2 * d * d * x * y - x ** 3 * y ** 3, x ** 4 * y * y, -d * x * x * y],
        [-d * x * y * y, -d * x * x * y, x * x * y * y],
    ])


def a_hessian(c: Coords, p: WellParams) -> np.ndarray:
    z = _interior_z(c)
    da = a_gradient(c, p)
    return np.diag([da[0] / c.x, da[1] / c.y, 0.0]) - p.M / z ** 3 * rank_deficient_term(c)


def g_hessian(c: Coords, p: WellParams) -> np.ndarray:
    """D^2 g = 2(e1(x)e1 + e2(x)e2) - D^2A/sqrt(A) + DA(x)DA / (2 A^{3/2})."""
    da = a_gradient(c, p)
    a = a_eval(c, p)
    sq = math.sqrt(a)
    return np.diag([2.0, 2.0, 0.0]) - a_hessian(c, p) / sq + np.outer(da, da) / (2.0 * a * sq)
