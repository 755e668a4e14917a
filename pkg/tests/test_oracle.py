import math

import numpy as np
import pytest

from twowell.energy import ThetaSpec, WellParams
from twowell.errors import BoxTooSmall, DomainError
from twowell.mat2 import Coords
from twowell.oracle import (
    GridSpec,
    numerical_gradient,
    numerical_hessian,
    oracle_dist2,
    oracle_h,
    probe_anchors,
    probe_c1_matching,
    probe_dist2,
    probe_envelope,
    probe_f_convexity,
    probe_hessian_psd_on_V,
    probe_laminates,
    probe_phase_diagram,
    probe_phi_monotone,
    probe_quartic,
    probe_rank_one_convexity,
    probe_xi_nonneg,
    run_verify,
)
from twowell.relaxation import h_eval, p_of_d, phi


def test_oracle_dist2_values(p) -> None:
    assert oracle_dist2(p.U1, p) == pytest.approx(0.0, abs=1e-10)
    assert oracle_dist2(np.eye(2), p) == pytest.approx(0.25 + 1 / 9, abs=1e-8)
    with pytest.raises(DomainError):
        oracle_dist2(np.eye(2), p, n_angles=4)


def test_oracle_dist2_grid_nesting(p, rng) -> None:
    for _ in range(5):
        F = rng.uniform(-3.0, 3.0, (2, 2))
        coarse = oracle_dist2(F, p, n_angles=500, refine=False)
        fine = oracle_dist2(F, p, n_angles=1000, refine=False)
        assert fine <= coarse


def test_oracle_h_values(p) -> None:
    assert oracle_h(Coords(1.0, 1.0, 1.0), p) == pytest.approx(0.0, abs=1e-6)
    s = math.sqrt(2.125)
    assert oracle_h(Coords(s, s, 1.0), p) == pytest.approx(5 / 18, abs=1e-6)


def test_oracle_h_box_too_small(p) -> None:
    with pytest.raises(BoxTooSmall):
        oracle_h(Coords(0.5, 0.5, 0.1), p, GridSpec(extent=0.01))
    with pytest.raises(DomainError):
        oracle_h(Coords(0.1, 0.1, 1.0), p)


def test_grid_spec_rejects() -> None:
    with pytest.raises(DomainError):
        GridSpec(extent=0.0)
    with pytest.raises(DomainError):
        GridSpec(extent=1.0, n=1)


def test_finite_differences() -> None:
    f = lambda x: x[0] ** 2 * x[1] + math.sin(x[1])  # noqa: E731
    x = [1.2, 0.3]
    assert numerical_gradient(f, x) == pytest.approx([2 * 1.2 * 0.3, 1.2 ** 2 + math.cos(0.3)], rel=1e-6)
    H = numerical_hessian(f, x)
    assert H == pytest.approx(np.array([[0.6, 2.4], [2.4, -math.sin(0.3)]]), abs=1e-5)


def test_anchor_probe_any_lambda() -> None:
    for lam in (1.0001, 1.5, 4.0):
        assert probe_anchors(WellParams(lam)).passed


@pytest.mark.parametrize(
    "check",
    [
        lambda p: probe_dist2(p, 20, 1, n_angles=4000),
        lambda p: probe_envelope(p, 10, 1),
        lambda p: probe_xi_nonneg(p, 500, 1),
        lambda p: probe_hessian_psd_on_V(p, 50, 1),
        lambda p: probe_rank_one_convexity(p, ThetaSpec.zero(), 50, 1),
        lambda p: probe_rank_one_convexity(p, ThetaSpec.indicator_det_one(), 50, 1),
        lambda p: probe_f_convexity(p, 50, 1),
        lambda p: probe_c1_matching(p, 20, 1),
        lambda p: probe_phi_monotone(p, n=50),
        lambda p: probe_quartic(p, 50, 1),
        lambda p: probe_laminates(p, ThetaSpec.zero(), 50, 1),
        lambda p: probe_laminates(p, ThetaSpec.indicator_det_one(), 50, 1),
    ],
)
def test_checks_pass(p, check) -> None:
    rep = check(p)
    assert rep.passed, rep.to_dict()
    assert rep.worst <= rep.tolerance


def test_phase_diagram_check() -> None:
    rep = probe_phase_diagram(WellParams(1.5), n=41)
    assert rep.passed, rep.to_dict()
    assert rep.details["regions"]["second_order"] > 0


def test_probe_reports_are_deterministic(p) -> None:
    a = probe_quartic(p, 30, seed=7).to_dict()
    b = probe_quartic(p, 30, seed=7).to_dict()
    assert a == b
    assert a["schema_version"] == "1"


def test_run_verify_quick(p) -> None:
    reports = run_verify(p, seed=3, samples=20, quick=True)
    names = [r.name for r in reports]
    assert "phase_diagram" in names and "anchors" in names
    assert all(r.passed for r in reports), [r.to_dict() for r in reports if not r.passed]


def test_oracle_h_near_the_edge() -> None:
    # lambda -> 1: the minimizer phi(y) sits ~1e-7 above x y = |d|
    p = WellParams(1.0001)
    y = p_of_d(1.0, p) + 1.0
    x_star = phi(y, 1.0, p).x_star
    c = Coords(1.0 / y + 0.5 * (x_star - 1.0 / y), y, 1.0)
    assert c.is_admissible()
    assert oracle_h(c, p) == pytest.approx(h_eval(c, p), abs=1e-6)


@pytest.mark.parametrize("lam", (1.0001, 1.1, 5.0))
def test_envelope_and_c1_across_lambda(lam) -> None:
    p = WellParams(lam)
    env = probe_envelope(p, 100, 42)
    assert env.passed, env.to_dict()
    c1 = probe_c1_matching(p, 200, 42)
    assert c1.passed, c1.to_dict()
    assert c1.details["checked"] > 0


def test_quartic_near_degenerate_wells() -> None:
    rep = probe_quartic(WellParams(1.0001), 200, 42)
    assert rep.passed, rep.to_dict()
