from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Callable, Optional, TypeVar

log = logging.getLogger("twowell")

T = TypeVar("T")

_TRUE = ("1", "true", "yes", "y", "on")
_FALSE = ("0", "false", "no", "n", "off")


def _raw(key: str) -> Optional[str]:
    # unset and blank both mean "use the default"
    v = os.getenv(key)
    if v is None or not v.strip():
        return None
    return v.strip()


def _parsed(key: str, default: T, parse: Callable[[str], T], kind: str) -> T:
    v = _raw(key)
    if v is None:
        return default
    try:
        return parse(v)
    except ValueError:
        log.warning("settings: %s=%r is not a valid %s, using %r", key, v, kind, default)
        return default


def env_str(key: str, default: str = "") -> str:
    v = _raw(key)
    return default if v is None else v


def env_int(key: str, default: int = 0) -> int:
    return _parsed(key, default, int, "integer")


def env_float(key: str, default: float = 0.0) -> float:
    return _parsed(key, default, float, "number")


def env_bool(key: str, default: bool = False) -> bool:
    v = _raw(key)
    if v is None:
        return default
    if v.lower() in _TRUE:
        return True
    if v.lower() in _FALSE:
        return False
    log.warning("settings: %s=%r is not a boolean, using %r", key, v, default)
    return default


@dataclass(frozen=True)
class Settings:
    APP_NAME: str = env_str("APP_NAME", "twowell relaxation")
    LOG_LEVEL: str = env_str("LOG_LEVEL", "INFO")

    # worker threads for grid sweeps / probes
    THREADS: int = max(1, env_int("TWOWELL_THREADS", 1))

    # solvers (phi, p(d))
    SOLVER_TOL: float = env_float("TWOWELL_SOLVER_TOL", 1e-12)
    SOLVER_MAX_ITER: int = env_int("TWOWELL_SOLVER_MAX_ITER", 200)
    CACHE_SIZE: int = env_int("TWOWELL_CACHE_SIZE", 65536)

    # det F = 1 is tested with this tolerance (indicator theta, K^qc)
    DET_TOL: float = env_float("TWOWELL_DET_TOL", 1e-9)

    LAMINATE_TOL: float = env_float("TWOWELL_LAMINATE_TOL", 1e-8)

    # HTTP API; empty token = no auth
    API_TOKEN: str = env_str("TWOWELL_API_TOKEN", "")
    API_HOST: str = env_str("TWOWELL_API_HOST", "127.0.0.1")
    API_PORT: int = env_int("TWOWELL_API_PORT", 8000)
    API_RELOAD: bool = env_bool("TWOWELL_API_RELOAD", False)


settings = Settings()
