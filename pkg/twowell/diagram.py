from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import serialize
from .energy import ThetaSpec, WellParams, parse_theta, theta_eval, w_eval
from .errors import DomainError
from .mat2 import coords, det
from .relaxation import PhaseRegion, boundary_curves, classify, h_eval, kqc_member, slice_coords, slice_matrix, wqc_eval
from .settings import settings

log = logging.getLogger("twowell")

CSV_COLUMNS = ["a", "b", "W", "Wqc", "region", "kqc_member"]


@dataclass(frozen=True)
class SliceSpec:
    """Grid over F = (a b; 0 1/a); d = 1 is implied by the matrix form."""

    a_range: Tuple[float, float, int] = (0.4, 2.0, 201)
    b_range: Tuple[float, float, int] = (-1.0, 1.0, 201)
    lam: float = 1.5
    theta: str = "indicator_det1"

    def __post_init__(self) -> None:
        for name, (lo, hi, n) in (("a", self.a_range), ("b", self.b_range)):
            if not lo < hi:
                raise DomainError(f"{name}-range needs lo < hi, got {lo}..{hi}")
            if int(n) < 2:
                raise DomainError(f"{name}-range needs at least 2 points, got {n}")
        if self.a_range[0] <= 0:
            raise DomainError("a must stay positive (F has 1/a in its corner)")
        WellParams(self.lam)
        parse_theta(self.theta)

    def a_values(self) -> np.ndarray:
        lo, hi, n = self.a_range
        return np.linspace(lo, hi, int(n))

    def b_values(self) -> np.ndarray:
        lo, hi, n = self.b_range
        return np.linspace(lo, hi, int(n))


@dataclass(frozen=True)
class DiagramRow:
    a: float
    b: float
    W: float
    Wqc: float
    region: PhaseRegion
    kqc_member: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": serialize.SCHEMA_VERSION,
            "a": self.a,
            "b": self.b,
            "W": serialize.num(self.W),
            "Wqc": serialize.num(self.Wqc),
            "region": self.region.value,
            "kqc_member": self.kqc_member,
        }


def evaluate_point(a: float, b: float, p: WellParams, th: ThetaSpec) -> DiagramRow:
    F = slice_matrix(a, b)
    c = slice_coords(a, b)
    th_val = theta_eval(th, det(F))
    wqc = math.inf if math.isinf(th_val) else h_eval(c, p) + th_val
    return DiagramRow(
        a=float(a),
        b=float(b),
        W=w_eval(F, p, th),
        Wqc=wqc,
        region=classify(c, p),
        kqc_member=kqc_member(F, p),
    )


def eval_record(F: np.ndarray, p: WellParams, th: ThetaSpec) -> Dict[str, Any]:
    """W, Wqc, coords, region and K^qc membership of one matrix, JSON-ready."""
    c = coords(F)
    return {
        "schema_version": serialize.SCHEMA_VERSION,
        "matrix": serialize.matrix(F),
        "lambda": p.lam,
        "theta": th.name,
        "W": serialize.num(w_eval(F, p, th)),
        "Wqc": serialize.num(wqc_eval(F, p, th)),
        "coords": {"x": c.x, "y": c.y, "d": c.d},
        "region": classify(c, p).value,
        "kqc_member": kqc_member(F, p),
    }


def compute_rows(spec: SliceSpec, threads: Optional[int] = None) -> List[DiagramRow]:
    """Row-major (a outer, b inner) regardless of how many threads compute it."""
    p = WellParams(spec.lam)
    th = parse_theta(spec.theta)
    b_values = spec.b_values()

    def line(a: float) -> List[DiagramRow]:
        return [evaluate_point(float(a), float(b), p, th) for b in b_values]

    threads = threads or settings.THREADS
    a_values = [float(a) for a in spec.a_values()]
    if threads <= 1:
        lines = [line(a) for a in a_values]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            lines = list(ex.map(line, a_values))
    rows = [r for chunk in lines for r in chunk]
    log.info("phase diagram: %s rows (lambda=%s, theta=%s, threads=%s)", len(rows), spec.lam, spec.theta, threads)
    return rows


def curves_for(spec: SliceSpec) -> Dict[str, List[Tuple[float, float]]]:
    lo, hi, n = spec.a_range
    a_fine = np.linspace(lo, hi, 4 * int(n))
    return boundary_curves(WellParams(spec.lam), a_fine, (spec.b_range[0], spec.b_range[1]))


def rows_frame(rows: Sequence[DiagramRow]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "a": [r.a for r in rows],
            "b": [r.b for r in rows],
            "W": [r.W for r in rows],
            "Wqc": [r.Wqc for r in rows],
            "region": [r.region.value for r in rows],
            "kqc_member": ["true" if r.kqc_member else "false" for r in rows],
        },
        columns=CSV_COLUMNS,
    )


def write_csv(rows: Sequence[DiagramRow], path: str) -> None:
    rows_frame(rows).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def write_curves_csv(curves: Dict[str, List[Tuple[float, float]]], path: str) -> None:
    records = [(name, a, b) for name, pts in curves.items() for a, b in pts]
    df = pd.DataFrame(records, columns=["curve", "a", "b"])
    df.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def diagram_document(spec: SliceSpec, rows: Sequence[DiagramRow], curves: Dict[str, List[Tuple[float, float]]]) -> Dict[str, Any]:
    return {
        "schema_version": serialize.SCHEMA_VERSION,
        "slice": {
            "a_range": list(spec.a_range),
            "b_range": list(spec.b_range),
            "lambda": spec.lam,
            "theta": spec.theta,
            "d": 1.0,
        },
        "rows": [r.to_dict() for r in rows],
        "curves": [
            {"schema_version": serialize.SCHEMA_VERSION, "curve": name, "points": [[a, b] for a, b in pts]}
            for name, pts in curves.items()
        ],
    }


def write_json(spec: SliceSpec, rows: Sequence[DiagramRow], curves: Dict[str, List[Tuple[float, float]]], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize.dumps(diagram_document(spec, rows, curves)))
        fh.write("\n")
