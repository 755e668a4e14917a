from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from . import serialize
from .energy import ThetaSpec, WellParams, w_eval
from .errors import DegenerateDirection, DomainError, InadmissibleInput, TwoWellError
from .mat2 import (
    V,
    W,
    Direction,
    coords,
    degenerate_line,
    image_vector,
    is_null,
    rank_one_line,
    signed_singular_values,
)
from .relaxation import PhaseRegion, classify, minimizer, p_of_d, wqc_eval
from .settings import settings

log = logging.getLogger("twowell")


@dataclass(frozen=True, eq=False)
class Split:
    mu: float
    direction: Direction
    t_plus: float
    t_minus: float
    degenerate: bool
    plus: "Laminate"
    minus: "Laminate"


@dataclass(frozen=True, eq=False)
class Laminate:
    """Node of a laminate tree: a matrix, split (or not) along a rank-one line."""

    matrix: np.ndarray
    split: Optional[Split] = None

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def depth(self) -> int:
        if self.split is None:
            return 0
        return 1 + max(self.split.plus.depth, self.split.minus.depth)

    def leaves(self, weight: float = 1.0) -> Iterator[Tuple[float, np.ndarray]]:
        if self.split is None:
            yield weight, self.matrix
            return
        s = self.split
        yield from s.plus.leaves(weight * s.mu)
        yield from s.minus.leaves(weight * (1.0 - s.mu))

    def nodes(self) -> Iterator["Laminate"]:
        yield self
        if self.split is not None:
            yield from self.split.plus.nodes()
            yield from self.split.minus.nodes()


@dataclass
class LaminateReport:
    barycenter_error: float = 0.0
    energy_gap: float = 0.0
    rank_one_defects: List[float] = field(default_factory=list)
    max_leaf_distance_to_target_coords: float = 0.0
    line_error: float = 0.0
    depth: int = 0
    root_energy: float = 0.0

    def passed(self, tol: float = 1e-6, energy_rel: float = 1e-6) -> bool:
        geometric = max([self.barycenter_error, self.line_error, self.max_leaf_distance_to_target_coords]
                        + self.rank_one_defects)
        scale = max(1.0, self.root_energy) if math.isfinite(self.root_energy) else 1.0
        return geometric <= tol and self.energy_gap <= energy_rel * scale and self.depth <= 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "barycenter_error": serialize.num(self.barycenter_error),
            "energy_gap": serialize.num(self.energy_gap),
            "rank_one_defects": [serialize.num(v) for v in self.rank_one_defects],
            "max_leaf_distance_to_target_coords": serialize.num(self.max_leaf_distance_to_target_coords),
            "line_error": serialize.num(self.line_error),
            "depth": self.depth,
        }


# ---------- splitting along rank-one lines ----------

def _split_roots(vec: np.ndarray, moving: np.ndarray, target: float) -> Tuple[float, float, float]:
    # |moving + t vec|^2 = target^2: a t^2 + 2 b t + c = 0 with c < 0
    a = float(vec @ vec)
    b = float(vec @ moving)
    c = float(moving @ moving) - target * target
    if c >= 0:
        raise DomainError(f"split target {target!r} must exceed the moving coordinate {math.sqrt(c + target * target)!r}")
    sq = math.sqrt(b * b - a * c)
    # stable pair of roots, t_minus < 0 < t_plus
    if b >= 0:
        q = -(b + sq)
        t_minus, t_plus = q / a, c / q
    else:
        q = sq - b
        t_plus, t_minus = q / a, c / q
    mu = -t_minus / (t_plus - t_minus)
    return t_plus, t_minus, mu


def solve_split(F: np.ndarray, direction: Direction, target: float) -> Tuple[float, float, float]:
    """t_minus < 0 < t_plus moving the coordinate to target, and mu with mu t+ + (1-mu) t- = 0."""
    vec = image_vector(F, direction)
    if is_null(F, vec):
        raise DegenerateDirection(f"{direction.value}: image vector vanishes, use the degenerate line")
    moving = F @ W if direction is Direction.RAISE_Y else F @ V
    return _split_roots(vec, moving, target)


def solve_degenerate_split(F: np.ndarray, direction: Direction, target: float) -> Tuple[float, float, float]:
    """Same as solve_split along F + t w(x)w (RAISE_Y) / F + t v(x)v (RAISE_X)."""
    if direction is Direction.RAISE_Y:
        return _split_roots(W, F @ W, target)
    return _split_roots(V, F @ V, target)


def _line(F: np.ndarray, direction: Direction, t: float, degenerate: bool) -> np.ndarray:
    if degenerate:
        return degenerate_line(F, direction, t)
    return rank_one_line(F, direction, t)


def _raise(
    F: np.ndarray,
    direction: Direction,
    target: float,
    tol: float,
    then: Optional[Callable[[np.ndarray], Laminate]] = None,
) -> Laminate:
    wrap = then or (lambda M: Laminate(M))
    if target - direction.moved(coords(F)) <= tol:
        return wrap(F)
    try:
        t_plus, t_minus, mu = solve_split(F, direction, target)
        degenerate = False
    except DegenerateDirection:
        log.debug("laminate: %s hits a null image vector, switching to the degenerate line", direction.value)
        t_plus, t_minus, mu = solve_degenerate_split(F, direction, target)
        degenerate = True
    plus = _line(F, direction, t_plus, degenerate)
    minus = _line(F, direction, t_minus, degenerate)
    return Laminate(F, Split(mu, direction, t_plus, t_minus, degenerate, wrap(plus), wrap(minus)))


def build_laminate(F: np.ndarray, p: WellParams, tol: Optional[float] = None) -> Laminate:
    """Laminate of order <= 2 whose leaves sit at the minimizing coordinates of h."""
    tol = settings.LAMINATE_TOL if tol is None else float(tol)
    c = coords(F)
    region = classify(c, p)
    if region is PhaseRegion.INADMISSIBLE:
        raise InadmissibleInput(f"coords {c.as_tuple()} are outside the closure of O")

    if region is PhaseRegion.UNRELAXED:
        return Laminate(F)
    target = minimizer(c, p)
    if region is PhaseRegion.FIRST_ORDER_RAISE_X:
        return _raise(F, Direction.RAISE_X, target.x, tol)
    if region is PhaseRegion.FIRST_ORDER_RAISE_Y:
        return _raise(F, Direction.RAISE_Y, target.y, tol)

    # second order: y first, then x in each child
    pd = p_of_d(c.d, p)
    return _raise(F, Direction.RAISE_Y, pd, tol, then=lambda M: _raise(M, Direction.RAISE_X, pd, tol))


# ---------- verification ----------

def verify_laminate(lam: Laminate, p: WellParams, th: ThetaSpec, tol: Optional[float] = None) -> LaminateReport:
    """Re-derive every split and compare energies; failures are reported, never raised."""
    tol = settings.LAMINATE_TOL if tol is None else float(tol)
    rep = LaminateReport(depth=lam.depth)

    for node in lam.nodes():
        s = node.split
        if s is None:
            continue
        F = node.matrix
        bary = s.mu * s.plus.matrix + (1.0 - s.mu) * s.minus.matrix
        weight_defect = max(0.0, -s.mu, s.mu - 1.0)
        rep.barycenter_error = max(rep.barycenter_error, float(np.linalg.norm(F - bary)) + weight_defect)
        rep.rank_one_defects.append(abs(signed_singular_values(s.plus.matrix - s.minus.matrix).lam1))
        try:
            plus = _line(F, s.direction, s.t_plus, s.degenerate)
            minus = _line(F, s.direction, s.t_minus, s.degenerate)
            line_err = max(float(np.linalg.norm(plus - s.plus.matrix)), float(np.linalg.norm(minus - s.minus.matrix)))
        except TwoWellError:
            line_err = math.inf
        rep.line_error = max(rep.line_error, line_err)

    root = wqc_eval(lam.matrix, p, th)
    rep.root_energy = root
    total = 0.0
    for weight, leaf in lam.leaves():
        total += weight * w_eval(leaf, p, th)
    if math.isinf(root) and math.isinf(total):
        rep.energy_gap = 0.0
    else:
        rep.energy_gap = abs(total - root)

    try:
        target = minimizer(coords(lam.matrix), p).as_tuple()
        for _, leaf in lam.leaves():
            got = coords(leaf).as_tuple()
            rep.max_leaf_distance_to_target_coords = max(
                rep.max_leaf_distance_to_target_coords, max(abs(u - v) for u, v in zip(got, target))
            )
    except DomainError:
        rep.max_leaf_distance_to_target_coords = math.inf

    if not rep.passed(max(tol, 1e-6)):
        log.warning("laminate verification failed: %s", rep.to_dict())
    return rep


def laminate_to_dict(lam: Laminate, p: WellParams, th: ThetaSpec) -> Dict[str, Any]:
    def node(n: Laminate, weight: float) -> Dict[str, Any]:
        c = coords(n.matrix)
        out: Dict[str, Any] = {
            "matrix": serialize.matrix(n.matrix),
            "coords": {"x": c.x, "y": c.y, "d": c.d},
            "weight": weight,
        }
        if n.split is None:
            out["energy"] = serialize.num(w_eval(n.matrix, p, th))
            return out
        s = n.split
        out["split"] = {
            "mu": s.mu,
            "direction": s.direction.value,
            "t_plus": s.t_plus,
            "t_minus": s.t_minus,
            "degenerate": s.degenerate,
            "plus": node(s.plus, weight * s.mu),
            "minus": node(s.minus, weight * (1.0 - s.mu)),
        }
        return out

    return {
        "schema_version": serialize.SCHEMA_VERSION,
        "lambda": p.lam,
        "theta": th.name,
        "depth": lam.depth,
        "leaves": sum(1 for _ in lam.leaves()),
        "root": node(lam, 1.0),
    }
