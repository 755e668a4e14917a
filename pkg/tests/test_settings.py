import logging

import pytest

from twowell.settings import env_bool, env_float, env_int, env_str


def test_unset_and_blank_use_default(monkeypatch) -> None:
    monkeypatch.delenv("TWOWELL_X", raising=False)
    assert env_int("TWOWELL_X", 7) == 7
    monkeypatch.setenv("TWOWELL_X", "   ")
    assert env_str("TWOWELL_X", "dflt") == "dflt"
    assert env_float("TWOWELL_X", 0.5) == 0.5


@pytest.mark.parametrize(
    "raw, fn, default, expected",
    [
        ("12", env_int, 1, 12),
        (" 3 ", env_int, 1, 3),
        ("1e-9", env_float, 0.0, 1e-9),
        ("yes", env_bool, False, True),
        ("Off", env_bool, True, False),
        (" token ", env_str, "", "token"),
    ],
)
def test_parsed_values(monkeypatch, raw, fn, default, expected) -> None:
    monkeypatch.setenv("TWOWELL_X", raw)
    assert fn("TWOWELL_X", default) == expected


@pytest.mark.parametrize("raw, fn, default", [("many", env_int, 4), ("1.2.3", env_float, 1e-12), ("maybe", env_bool, True)])
def test_rejected_values_are_logged(monkeypatch, caplog, raw, fn, default) -> None:
    monkeypatch.setenv("TWOWELL_X", raw)
    with caplog.at_level(logging.WARNING, logger="twowell"):
        assert fn("TWOWELL_X", default) == default
    assert "TWOWELL_X" in caplog.text
    assert repr(raw) in caplog.text
