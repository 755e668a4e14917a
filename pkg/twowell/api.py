from __future__ import annotations

import hmac
import logging
from typing import Any, Dict, List, Optional, Tuple

from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__, serialize
from .diagram import SliceSpec, compute_rows, curves_for, diagram_document, eval_record
from .energy import WellParams, parse_theta
from .errors import DomainError, TwoWellError
from .laminate import build_laminate, laminate_to_dict, verify_laminate
from .mat2 import as_mat2
from .settings import settings

log = logging.getLogger("twowell")
logging.basicConfig(level=settings.LOG_LEVEL)

# per-axis cap for the phase-diagram endpoint
MAX_AXIS_POINTS = 201

app = FastAPI(title=settings.APP_NAME, version=__version__)


class MatrixIn(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    matrix: List[float] = Field(..., min_length=4, max_length=4, description="row-major 2x2")
    lam: float = Field(1.5, alias="lambda")
    theta: str = "zero"


class PhaseDiagramIn(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    a_range: Tuple[float, float, int] = (0.4, 2.0, 41)
    b_range: Tuple[float, float, int] = (-1.0, 1.0, 41)
    lam: float = Field(1.5, alias="lambda")
    theta: str = "indicator_det1"


def _check_bearer(authorization: Optional[str] = Header(default=None)) -> None:
    expected = settings.API_TOKEN.strip()
    if not expected:
        # no token configured: endpoints are open
        return

    scheme, _, got = (authorization or "").partition(" ")
    got = got.strip()
    if scheme.lower() != "bearer" or not got:
        log.info("API: rejected request without a bearer token")
        raise HTTPException(status_code=401, detail="Missing Bearer token")
    if not hmac.compare_digest(got.encode(), expected.encode()):
        log.warning("API: rejected request with an invalid bearer token")
        raise HTTPException(status_code=403, detail="Invalid token")


@app.exception_handler(TwoWellError)
async def twowell_error(request: Request, exc: TwoWellError) -> JSONResponse:
    log.warning("API %s %s: %s: %s", request.method, request.url.path, type(exc).__name__, exc)
    return JSONResponse(status_code=422, content={"detail": str(exc), "error": type(exc).__name__})


@app.get("/")
def root() -> Dict[str, Any]:
    return {"ok": True, "service": settings.APP_NAME, "version": __version__}


@app.get("/health")
def health() -> Dict[str, Any]:
    return {"ok": True}


@app.post("/api/v1/eval", dependencies=[Depends(_check_bearer)])
def api_eval(req: MatrixIn) -> Dict[str, Any]:
    return eval_record(as_mat2(req.matrix), WellParams(req.lam), parse_theta(req.theta))


@app.post("/api/v1/laminate", dependencies=[Depends(_check_bearer)])
def api_laminate(req: MatrixIn) -> Dict[str, Any]:
    p = WellParams(req.lam)
    th = parse_theta(req.theta)
    lam = build_laminate(as_mat2(req.matrix), p)
    rep = verify_laminate(lam, p, th)
    return {
        "schema_version": serialize.SCHEMA_VERSION,
        "laminate": laminate_to_dict(lam, p, th),
        "report": rep.to_dict(),
        "passed": rep.passed(1e-6),
    }


@app.post("/api/v1/phase-diagram", dependencies=[Depends(_check_bearer)])
def api_phase_diagram(req: PhaseDiagramIn) -> Dict[str, Any]:
    if max(req.a_range[2], req.b_range[2]) > MAX_AXIS_POINTS:
        raise DomainError(f"at most {MAX_AXIS_POINTS} points per axis")
    spec = SliceSpec(a_range=req.a_range, b_range=req.b_range, lam=req.lam, theta=req.theta)
    rows = compute_rows(spec)
    log.info("API phase diagram: %s rows (lambda=%s)", len(rows), spec.lam)
    return diagram_document(spec, rows, curves_for(spec))
