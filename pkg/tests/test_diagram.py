import json

import pytest

from twowell.diagram import (
    CSV_COLUMNS,
    SliceSpec,
    compute_rows,
    curves_for,
    diagram_document,
    eval_record,
    evaluate_point,
    write_csv,
    write_curves_csv,
    write_json,
)
from twowell.energy import ThetaSpec
from twowell.errors import DomainError, ThetaError
from twowell.relaxation import PhaseRegion

SMALL = SliceSpec(a_range=(0.5, 1.5, 5), b_range=(-0.5, 0.5, 5))


def test_slice_spec_rejects() -> None:
    with pytest.raises(DomainError):
        SliceSpec(a_range=(1.0, 1.0, 5))
    with pytest.raises(DomainError):
        SliceSpec(b_range=(-1.0, 1.0, 1))
    with pytest.raises(DomainError):
        SliceSpec(a_range=(-1.0, 1.0, 5))
    with pytest.raises(DomainError):
        SliceSpec(lam=1.0)
    with pytest.raises(ThetaError):
        SliceSpec(theta="nope")


def test_rows_are_row_major() -> None:
    rows = compute_rows(SMALL, threads=1)
    assert len(rows) == 25
    assert [(r.a, r.b) for r in rows[:6]] == [
        (0.5, -0.5), (0.5, -0.25), (0.5, 0.0), (0.5, 0.25), (0.5, 0.5), (0.75, -0.5),
    ]


def test_threads_do_not_change_output() -> None:
    one = [r.to_dict() for r in compute_rows(SMALL, threads=1)]
    four = [r.to_dict() for r in compute_rows(SMALL, threads=4)]
    assert one == four


def test_identity_point(p) -> None:
    row = evaluate_point(1.0, 0.0, p, ThetaSpec.indicator_det_one())
    assert row.region is PhaseRegion.SECOND_ORDER
    assert row.kqc_member
    assert row.Wqc == pytest.approx(0.0, abs=1e-10)
    assert row.W == pytest.approx(0.25 + 1 / 9)


def test_eval_record(p) -> None:
    rec = eval_record(p.U2, p, ThetaSpec.zero())
    assert rec["W"] == pytest.approx(0.0, abs=1e-12)
    assert rec["Wqc"] == pytest.approx(0.0, abs=1e-12)
    assert rec["kqc_member"] is True
    assert rec["schema_version"] == "1"
    rec = eval_record([[2.0, 0.0], [0.0, 2.0]], p, ThetaSpec.indicator_det_one())
    assert rec["W"] == "inf" and rec["Wqc"] == "inf"


def test_write_csv(tmp_path) -> None:
    out = tmp_path / "pd.csv"
    write_csv(compute_rows(SMALL, threads=1), str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) == "a,b,W,Wqc,region,kqc_member"
    assert len(lines) == 26
    a, b, *_, region, member = lines[1].split(",")
    assert (float(a), float(b)) == (0.5, -0.5)
    assert member in ("true", "false")
    assert region in {r.value for r in PhaseRegion}


def test_write_curves_and_json(tmp_path) -> None:
    rows = compute_rows(SMALL, threads=1)
    curves = curves_for(SMALL)
    write_curves_csv(curves, str(tmp_path / "curves.csv"))
    assert (tmp_path / "curves.csv").read_text().splitlines()[0] == "curve,a,b"

    write_json(SMALL, rows, curves, str(tmp_path / "pd.json"))
    doc = json.loads((tmp_path / "pd.json").read_text())
    assert doc == json.loads(json.dumps(diagram_document(SMALL, rows, curves)))
    assert doc["schema_version"] == "1"
    assert doc["slice"]["d"] == 1.0
    assert len(doc["rows"]) == 25
    assert {c["curve"] for c in doc["curves"]} <= {"plus_upper", "plus_lower", "minus_upper", "minus_lower"}
