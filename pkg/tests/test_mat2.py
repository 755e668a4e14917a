import math

import numpy as np
import pytest

from twowell.errors import DomainError, PreconditionViolated
from twowell.mat2 import (
    V,
    W,
    Coords,
    Direction,
    as_mat2,
    coords,
    degenerate_line,
    det,
    fv_dot_fw,
    image_vector,
    rank_one_line,
    signed_singular_values,
)


def test_coords_identity() -> None:
    c = coords(np.eye(2))
    assert c.as_tuple() == pytest.approx((1.0, 1.0, 1.0))


def test_coords_diagonal() -> None:
    c = coords(np.diag([2.0, 0.5]))
    assert c.x == pytest.approx(math.sqrt(2.125))
    assert c.y == pytest.approx(math.sqrt(2.125))
    assert c.d == 1.0


@pytest.mark.parametrize(
    "F, lam1, lam2",
    (
        (np.diag([2.0, 0.5]), 0.5, 2.0),
        (np.diag([2.0, -0.5]), -0.5, 2.0),
        (np.eye(2), 1.0, 1.0),
    ),
)
def test_signed_singular_values(F, lam1, lam2) -> None:
    s = signed_singular_values(F)
    assert s.lam1 == pytest.approx(lam1)
    assert s.lam2 == pytest.approx(lam2)
    assert s.lam1 * s.lam2 == pytest.approx(det(F))


def test_fv_dot_fw_is_z(rng) -> None:
    for F in rng.uniform(-3.0, 3.0, (50, 2, 2)):
        c = coords(F)
        z = math.sqrt(max(c.x ** 2 * c.y ** 2 - c.d ** 2, 0.0))
        assert abs(fv_dot_fw(F)) == pytest.approx(z, rel=1e-6, abs=1e-6)
        assert c.is_admissible()


@pytest.mark.parametrize("values", ([1.0, 2.0, 3.0], [[1.0, 2.0], [3.0]], [1.0, 0.0, 0.0, float("nan")]))
def test_as_mat2_rejects(values) -> None:
    with pytest.raises(DomainError):
        as_mat2(values)


def test_as_mat2_row_major() -> None:
    F = as_mat2([1, 2, 3, 4])
    assert F.shape == (2, 2)
    assert F[0, 1] == 2.0 and F[1, 0] == 3.0


@pytest.mark.parametrize("direction", list(Direction))
def test_rank_one_line_moves_one_coordinate(direction, rng) -> None:
    F = rng.uniform(-2.0, 2.0, (2, 2))
    c0 = coords(F)
    for t in (-0.7, 0.3, 1.9):
        c = coords(rank_one_line(F, direction, t))
        assert c.d == pytest.approx(c0.d, abs=1e-12)
        if direction is Direction.RAISE_Y:
            assert c.x == pytest.approx(c0.x)
        else:
            assert c.y == pytest.approx(c0.y)
    diff = rank_one_line(F, direction, 1.0) - rank_one_line(F, direction, -1.0)
    assert det(diff) == pytest.approx(0.0, abs=1e-12)


def test_image_vector() -> None:
    F = np.array([[1.0, 2.0], [0.0, 3.0]])
    assert np.allclose(image_vector(F, Direction.RAISE_Y), F @ V)
    assert np.allclose(image_vector(F, Direction.RAISE_X), F @ W)


def test_degenerate_line() -> None:
    F = np.outer([1.0, 2.0], W)  # Fv = 0
    for t in (-1.0, 0.5, 3.0):
        G = degenerate_line(F, Direction.RAISE_Y, t)
        assert det(G) == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(G @ V, 0.0)
    with pytest.raises(PreconditionViolated):
        degenerate_line(F, Direction.RAISE_X, 1.0)


def test_admissibility() -> None:
    assert Coords(1.0, 1.0, 1.0).is_admissible()
    assert not Coords(0.5, 0.5, 1.0).is_admissible()
    assert not Coords(-1.0, 1.0, 0.0).is_admissible()
