from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .energy import ThetaSpec, WellParams, g_eval, g_hessian, theta_eval
from .errors import ConvergenceFailure, DomainError
from .mat2 import Coords, coords, det
from .settings import settings

log = logging.getLogger("twowell")

_RTOL = 4.0 * np.finfo(float).eps
_XTOL = 1e-15


class PhaseRegion(str, enum.Enum):
    SECOND_ORDER = "second_order"
    FIRST_ORDER_RAISE_X = "first_order_raise_x"
    FIRST_ORDER_RAISE_Y = "first_order_raise_y"
    UNRELAXED = "unrelaxed"
    INADMISSIBLE = "inadmissible"

    @property
    def lamination_order(self) -> int:
        if self is PhaseRegion.SECOND_ORDER:
            return 2
        if self in (PhaseRegion.FIRST_ORDER_RAISE_X, PhaseRegion.FIRST_ORDER_RAISE_Y):
            return 1
        return 0


@dataclass(frozen=True)
class PhiSolve:
    x_star: float
    residual: float
    iterations: int
    bracket: Tuple[float, float]


def _tol(tol: Optional[float]) -> float:
    t = settings.SOLVER_TOL if tol is None else float(tol)
    if not t > 0:
        raise DomainError(f"solver tolerance must be positive, got {tol}")
    return t


# ---------- phase boundary phi(y, d) ----------

def _lhs_rhs(x: float, y: float, d: float, L: float, M: float) -> Tuple[float, float]:
    rad = (x * y) ** 2 - d * d
    if rad <= 0.0:
        return math.inf, 0.0
    z = math.sqrt(rad)
    a = 0.5 * (x * x + y * y) * L + M * z + 2.0 * d
    return L + M * y * y / z, 2.0 * math.sqrt(max(a, 0.0))


def phi_residual(x: float, y: float, d: float, p: WellParams) -> float:
    """Unsquared stationarity residual L + M y^2/z - 2 sqrt(A): > 0 below phi, < 0 above."""
    lhs, rhs = _lhs_rhs(x, y, d, p.L, p.M)
    return lhs - rhs


def _solve_phi(y: float, d: float, lam: float, tol: float, max_iter: int) -> PhiSolve:
    p = WellParams(lam)
    L, M = p.L, p.M

    def f(x: float) -> float:
        lhs, rhs = _lhs_rhs(x, y, d, L, M)
        return lhs - rhs

    base = abs(d) / y
    delta = min(1e-3 * max(base, 1.0), 0.5)
    lo = base + delta
    for _ in range(max_iter):
        flo = f(lo)
        if flo > 0 and math.isfinite(flo):
            break
        delta /= 16.0
        lo = base + delta
        if lo <= base:
            raise ConvergenceFailure(f"phi: lower bracket collapsed onto |d|/y for y={y!r} d={d!r}")
    else:
        raise ConvergenceFailure(f"phi: no lower bracket for y={y!r} d={d!r}")

    hi = max(y, base) + 1.0
    for _ in range(max_iter):
        if f(hi) < 0:
            break
        hi *= 2.0
    else:
        raise ConvergenceFailure(f"phi: no upper bracket for y={y!r} d={d!r}")

    root, info = brentq(f, lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=max_iter, full_output=True, disp=False)
    if not info.converged:
        raise ConvergenceFailure(f"phi: brentq did not converge for y={y!r} d={d!r}: {info.flag}")

    lhs, rhs = _lhs_rhs(root, y, d, L, M)
    residual = lhs - rhs
    # a steep residual (z -> 0, lambda -> 1) can miss tol at the nearest float; a tight sign change is enough
    width = 4.0 * (_XTOL + _RTOL * abs(root))
    if abs(residual) > tol * max(1.0, lhs) and not (f(root - width) > 0 > f(root + width)):
        raise ConvergenceFailure(f"phi: residual {residual:.3e} above tolerance at y={y!r} d={d!r}")

    log.debug("phi(y=%r, d=%r) = %r after %s iterations, bracket [%r, %r]", y, d, root, info.iterations, lo, hi)
    return PhiSolve(x_star=float(root), residual=float(residual), iterations=int(info.iterations), bracket=(lo, hi))


@lru_cache(maxsize=settings.CACHE_SIZE)
def _phi_cached(y: float, d: float, lam: float, tol: float, max_iter: int) -> PhiSolve:
    return _solve_phi(y, d, lam, tol, max_iter)


def phi(y: float, d: float, p: WellParams, tol: Optional[float] = None) -> PhiSolve:
    """The unique x in (|d|/y, inf) with d_x g(x, y, d) = 0."""
    y = float(y)
    if not y > 0 or not math.isfinite(y):
        raise DomainError(f"phi needs y > 0, got {y}")
    return _phi_cached(y, float(d), p.lam, _tol(tol), settings.SOLVER_MAX_ITER)


def phi_y_derivative(y: float, d: float, p: WellParams, tol: Optional[float] = None) -> float:
    """d_y phi from the implicit function theorem: -d_xy g / d_xx g at x = phi(y, d)."""
    x = phi(y, d, p, tol).x_star
    hess = g_hessian(Coords(x, y, d), p)
    return float(-hess[0, 1] / hess[0, 0])


# ---------- quartic cross-check ----------

def phi_quartic(y: float, d: float, p: WellParams) -> List[float]:
    """Candidate x = sqrt(u) from the doubly squared stationarity equation.

    With u = x^2, Z = z^2 = y^2 u - d^2 and G = 2L(u + y^2) + 8d the equation
    (L^2 Z + M^2 y^4 - G Z)^2 = (4M Z - 2LM y^2)^2 Z is a quartic in u.
    It is assembled in Z (an affine change of u) so roots near Z = 0 keep
    their digits. Squaring adds roots; callers filter with filter_quartic_roots.
    """
    if not y > 0:
        raise DomainError(f"phi_quartic needs y > 0, got {y}")
    L, M = p.L, p.M
    y2 = y * y
    Z = Polynomial([0.0, 1.0])
    # G with u = (Z + d^2) / y^2
    G = Polynomial([2.0 * L * (d * d / y2 + y2) + 8.0 * d, 2.0 * L / y2])
    lhs = (L * L - G) * Z + M * M * y2 * y2
    q = 4.0 * M * Z - 2.0 * L * M * y2
    quartic = lhs * lhs - q * q * Z
    dq = quartic.deriv()

    out: List[float] = []
    for r in quartic.roots():
        if abs(r.imag) > 1e-6 * max(1.0, abs(r.real)):
            continue
        zz = float(r.real)
        # polish (companion eigenvalues are only ~1e-8 accurate)
        for _ in range(8):
            slope = dq(zz)
            if slope == 0.0:
                break
            step = quartic(zz) / slope
            zz -= step
            if abs(step) <= 1e-16 * abs(zz):
                break
        if zz <= 0.0:
            continue
        x = math.sqrt(zz + d * d) / y
        if all(abs(x - prev) > 1e-12 * max(1.0, prev) for prev in out):
            out.append(x)
    return sorted(out)


def filter_quartic_roots(
    candidates: Sequence[float], y: float, d: float, p: WellParams, rel_tol: float = 1e-6
) -> List[float]:
    """Keep candidates that solve the unsquared equation.

    A candidate whose residual misses rel_tol still counts when the residual
    changes sign across a bracket around it. The residual is steep near
    x y = |d|, where a root accurate to the last few digits can miss any
    fixed tolerance. Each bracket stays within half the gap to the neighbouring
    candidates, and the residual changes sign only once, at phi.
    """
    xs = sorted(float(x) for x in candidates)
    kept: List[float] = []
    for k, x in enumerate(xs):
        lhs, rhs = _lhs_rhs(x, y, d, p.L, p.M)
        if not math.isfinite(lhs):
            continue
        if abs(lhs - rhs) <= rel_tol * max(1.0, lhs):
            kept.append(x)
            continue
        width = 1e-9 * max(1.0, x)
        if k > 0:
            width = min(width, 0.5 * (x - xs[k - 1]))
        if k + 1 < len(xs):
            width = min(width, 0.5 * (xs[k + 1] - x))
        if width > 0 and phi_residual(x - width, y, d, p) > 0 > phi_residual(x + width, y, d, p):
            kept.append(x)
    if len(kept) < len(candidates):
        log.debug("quartic: dropped %s spurious root(s) at y=%r d=%r", len(candidates) - len(kept), y, d)
    return kept


# ---------- fixed point p(d) ----------

def _solve_p(d: float, lam: float, tol: float, max_iter: int) -> float:
    def psi(y: float) -> float:
        return _solve_phi(y, d, lam, tol, max_iter).x_star - y

    y0 = max(1.0, math.sqrt(abs(d)))
    lo = hi = y0
    for _ in range(max_iter):
        if psi(lo) > 0:
            break
        lo *= 0.5
    else:
        raise ConvergenceFailure(f"p(d): no lower bracket for d={d!r}")
    for _ in range(max_iter):
        if psi(hi) < 0:
            break
        hi *= 2.0
    else:
        raise ConvergenceFailure(f"p(d): no upper bracket for d={d!r}")

    root, info = brentq(psi, lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=max_iter, full_output=True, disp=False)
    if not info.converged:
        raise ConvergenceFailure(f"p(d): brentq did not converge for d={d!r}: {info.flag}")
    if abs(psi(root)) > max(tol, 1e-14) * max(1.0, root):
        raise ConvergenceFailure(f"p(d): fixed point residual too large for d={d!r}")
    log.debug("p(d=%r) = %r after %s iterations", d, root, info.iterations)
    return float(root)


@lru_cache(maxsize=settings.CACHE_SIZE)
def _p_cached(d: float, lam: float, tol: float, max_iter: int) -> float:
    return _solve_p(d, lam, tol, max_iter)


def p_of_d(d: float, p: WellParams, tol: Optional[float] = None) -> float:
    """The unique p > 0 with phi(p, d) = p."""
    d = float(d)
    if not math.isfinite(d):
        raise DomainError(f"p_of_d needs a finite determinant, got {d}")
    return _p_cached(d, p.lam, _tol(tol), settings.SOLVER_MAX_ITER)


def clear_caches() -> None:
    _phi_cached.cache_clear()
    _p_cached.cache_clear()


# ---------- regions, h, f ----------

def _region(x: float, y: float, d: float, p: WellParams, tol: Optional[float]) -> PhaseRegion:
    # boundary ties resolve in case order: second order, raise x, raise y
    pd = p_of_d(d, p, tol)
    if x <= pd and y <= pd:
        return PhaseRegion.SECOND_ORDER
    if y >= pd and x <= phi(y, d, p, tol).x_star:
        return PhaseRegion.FIRST_ORDER_RAISE_X
    if x >= pd and y <= phi(x, d, p, tol).x_star:
        return PhaseRegion.FIRST_ORDER_RAISE_Y
    return PhaseRegion.UNRELAXED


def classify(c: Coords, p: WellParams, tol: Optional[float] = None) -> PhaseRegion:
    if not c.is_admissible():
        return PhaseRegion.INADMISSIBLE
    return _region(c.x, c.y, c.d, p, tol)


def _argmin(x: float, y: float, d: float, region: PhaseRegion, p: WellParams, tol: Optional[float]) -> Coords:
    if region is PhaseRegion.SECOND_ORDER:
        pd = p_of_d(d, p, tol)
        return Coords(pd, pd, d)
    if region is PhaseRegion.FIRST_ORDER_RAISE_X:
        return Coords(phi(y, d, p, tol).x_star, y, d)
    if region is PhaseRegion.FIRST_ORDER_RAISE_Y:
        return Coords(x, phi(x, d, p, tol).x_star, d)
    return Coords(x, y, d)


def minimizer(c: Coords, p: WellParams, tol: Optional[float] = None) -> Coords:
    """(xi*, eta*, d) minimizing g over [x, inf) x [y, inf)."""
    region = classify(c, p, tol)
    if region is PhaseRegion.INADMISSIBLE:
        raise DomainError(f"coords outside the closure of O: {c.as_tuple()}")
    return _argmin(c.x, c.y, c.d, region, p, tol)


def h_eval(c: Coords, p: WellParams, tol: Optional[float] = None) -> float:
    return g_eval(minimizer(c, p, tol), p)


def f_eval(x: float, y: float, d: float, p: WellParams, tol: Optional[float] = None) -> float:
    """Convex C^1 extension of h to all of R^3 (no admissibility check)."""
    region = _region(float(x), float(y), float(d), p, tol)
    return g_eval(_argmin(float(x), float(y), float(d), region, p, tol), p)


def wqc_eval(F: np.ndarray, p: WellParams, th: ThetaSpec) -> float:
    th_val = theta_eval(th, det(F))
    if math.isinf(th_val):
        return math.inf
    return h_eval(coords(F), p) + th_val


def kqc_member(F: np.ndarray, p: WellParams, tol: Optional[float] = None) -> bool:
    """det F = 1 and |F(e1 +- e2)|^2 <= L."""
    t = settings.DET_TOL if tol is None else float(tol)
    if abs(det(F) - 1.0) > t:
        return False
    plus = float(np.sum((F[:, 0] + F[:, 1]) ** 2))
    minus = float(np.sum((F[:, 0] - F[:, 1]) ** 2))
    return plus <= p.L + t and minus <= p.L + t


# ---------- benchmark slice F = (a b; 0 1/a) ----------

def slice_matrix(a: float, b: float) -> np.ndarray:
    return np.array([[a, b], [0.0, 1.0 / a]])


def slice_coords(a: float, b: float) -> Coords:
    """Coords of slice_matrix with the exact implied determinant 1."""
    c = coords(slice_matrix(a, b))
    return Coords(c.x, c.y, 1.0)


def boundary_curves(
    p: WellParams, a_values: Sequence[float], b_range: Tuple[float, float]
) -> Dict[str, List[Tuple[float, float]]]:
    """Branches of (a +- b)^2 + 1/a^2 = L inside b_range, one polyline per branch."""
    lo, hi = b_range
    curves: Dict[str, List[Tuple[float, float]]] = {
        "plus_upper": [], "plus_lower": [], "minus_upper": [], "minus_lower": [],
    }
    for a in a_values:
        rad = p.L - 1.0 / (a * a)
        if rad < 0:
            continue
        r = math.sqrt(rad)
        for name, b in (
            ("plus_upper", -a + r),
            ("plus_lower", -a - r),
            ("minus_upper", a + r),
            ("minus_lower", a - r),
        ):
            if lo <= b <= hi:
                curves[name].append((float(a), float(b)))
    return {k: v for k, v in curves.items() if v}
