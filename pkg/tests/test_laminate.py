import dataclasses
import json
import math

import numpy as np
import pytest

from twowell import serialize
from twowell.energy import ThetaSpec, dist2_two_wells, w_eval
from twowell.laminate import Laminate, build_laminate, laminate_to_dict, solve_split, verify_laminate
from twowell.mat2 import W, Direction, coords, det, rank_one_line
from twowell.relaxation import PhaseRegion, classify, p_of_d


def test_solve_split_identity() -> None:
    t_plus, t_minus, mu = solve_split(np.eye(2), Direction.RAISE_Y, math.sqrt(2.0))
    assert t_plus == pytest.approx(1.0)
    assert t_minus == pytest.approx(-1.0)
    assert mu == pytest.approx(0.5)


@pytest.mark.parametrize("direction", list(Direction))
def test_solve_split_random(direction, rng) -> None:
    for _ in range(50):
        F = rng.uniform(-2.0, 2.0, (2, 2))
        c = coords(F)
        target = direction.moved(c) + rng.uniform(0.1, 2.0)
        t_plus, t_minus, mu = solve_split(F, direction, target)
        assert t_minus < 0 < t_plus
        assert 0 < mu < 1
        plus = rank_one_line(F, direction, t_plus)
        minus = rank_one_line(F, direction, t_minus)
        scale = (1.0 + t_plus - t_minus) * (1.0 + np.abs(F).max())
        assert np.abs(mu * plus + (1 - mu) * minus - F).max() <= 1e-12 * scale
        for child in (plus, minus):
            cc = coords(child)
            assert direction.moved(cc) == pytest.approx(target)
            assert cc.d == pytest.approx(c.d, abs=1e-10 * scale)
            if direction is Direction.RAISE_Y:
                assert cc.x == pytest.approx(c.x)


def test_identity_second_order(p) -> None:
    th = ThetaSpec.indicator_det_one()
    lam = build_laminate(np.eye(2), p)
    leaves = list(lam.leaves())
    assert lam.depth == 2
    assert len(leaves) == 4
    assert sum(w for w, _ in leaves) == pytest.approx(1.0)
    w = p.well_coord
    for _, leaf in leaves:
        assert dist2_two_wells(leaf, p) <= 1e-8
        assert coords(leaf).as_tuple() == pytest.approx((w, w, 1.0))
    rep = verify_laminate(lam, p, th)
    assert rep.passed(1e-8)
    assert rep.barycenter_error <= 1e-8
    assert rep.energy_gap <= 1e-8
    assert max(rep.rank_one_defects) <= 1e-8


def test_unrelaxed_single_leaf(p) -> None:
    lam = build_laminate(np.diag([2.0, 0.5]), p)
    assert lam.is_leaf
    (weight, leaf), = lam.leaves()
    assert weight == 1.0
    assert w_eval(leaf, p, ThetaSpec.zero()) == pytest.approx(5 / 18)


def test_well_is_a_leaf(p) -> None:
    lam = build_laminate(p.U1, p)
    assert lam.depth == 0
    rep = verify_laminate(lam, p, ThetaSpec.zero())
    assert rep.energy_gap == pytest.approx(0.0, abs=1e-12)
    assert rep.barycenter_error == 0.0
    assert rep.rank_one_defects == []


def test_singular_first_order(p) -> None:
    F = np.outer([2.0, 0.0], W)
    assert classify(coords(F), p) is PhaseRegion.FIRST_ORDER_RAISE_X
    lam = build_laminate(F, p)
    assert lam.depth == 1
    for _, leaf in lam.leaves():
        assert det(leaf) == pytest.approx(0.0, abs=1e-12)
    assert verify_laminate(lam, p, ThetaSpec.zero()).passed(1e-8)


def test_degenerate_line_branch(p) -> None:
    F = np.outer([0.5, 0.0], W)  # Fv = 0, second order at d = 0
    assert classify(coords(F), p) is PhaseRegion.SECOND_ORDER
    lam = build_laminate(F, p)
    assert lam.split is not None and lam.split.degenerate
    pd = p_of_d(0.0, p)
    for _, leaf in lam.leaves():
        assert coords(leaf).as_tuple() == pytest.approx((pd, pd, 0.0), abs=1e-8)
    assert verify_laminate(lam, p, ThetaSpec.zero()).passed(1e-8)


def test_perturbed_weight_is_reported(p) -> None:
    lam = build_laminate(np.eye(2), p)
    bad = Laminate(lam.matrix, dataclasses.replace(lam.split, mu=lam.split.mu + 0.1))
    rep = verify_laminate(bad, p, ThetaSpec.zero())
    assert rep.barycenter_error > 0.01
    assert not rep.passed()


def test_random_laminates(p, rng) -> None:
    th = ThetaSpec.zero()
    for _ in range(100):
        F = rng.uniform(-2.0, 2.0, (2, 2))
        lam = build_laminate(F, p)
        rep = verify_laminate(lam, p, th)
        assert lam.depth <= 2
        assert rep.energy_gap <= 1e-6 * max(1.0, w_eval(F, p, th))
        assert rep.max_leaf_distance_to_target_coords <= 1e-7
        for _, leaf in lam.leaves():
            assert det(leaf) == pytest.approx(det(F), abs=1e-8)


def test_laminate_to_dict(p) -> None:
    th = ThetaSpec.zero()
    doc = laminate_to_dict(build_laminate(np.eye(2), p), p, th)
    assert doc["schema_version"] == "1"
    assert doc["depth"] == 2
    assert doc["leaves"] == 4
    assert doc["root"]["split"]["direction"] == "raise_y"
    assert json.loads(serialize.dumps(doc)) == doc
