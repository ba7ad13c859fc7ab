import math

import pytest

import hyperbuild as hb


def test_constants():
    c = hb.compute_constants(5, 3)
    assert abs(c.Q - 1.720210) < 1e-5
    assert abs(c.a - 2.618034) < 1e-5
    assert abs(hb.compute_constants(6, 3).Q - (1 + math.log(2) / math.acosh(2))) < 1e-12


def test_polygon():
    assert abs(math.cosh(hb.polygon_side_length(6)) - 2.0) < 1e-6


def test_lemma5_closed_form():
    lhs, s_left, s_right, ratio = hb.lemma5_ratio([0.0, 1.0], [1.0], 1.5)
    assert lhs == pytest.approx(1.0)
    assert s_left == pytest.approx(2 / 3)
    assert s_right == pytest.approx(2 / 3)
    assert ratio == pytest.approx(0.75)


def test_path_modulus():
    Q = 1.5
    value, lower = hb.path_modulus(5, [(i, i + 1) for i in range(4)], [0], [4], Q)
    assert abs(value - 5 ** (1 - Q)) < 1e-4
    assert lower <= value * (1 + 1e-12)


def test_run_check():
    r = hb.run_check("dim", {"p": 5, "q": 3})
    assert r["status"] == "pass"
    assert r["columns"] == ["p", "q", "Q", "a"]
    assert r["rows"][0] == ["5", "3", "1.72021005", "2.61803399"]
    assert r["values"]["Q"] == pytest.approx(1.72021005)
    assert set(hb.check_names()) >= {"dim", "lemma5", "modulus", "loewner"}


def test_csv_metadata():
    csv = hb.report_csv("polygon")
    assert csv.splitlines()[-1].startswith("# p=6,q=3,")
    assert csv.splitlines()[-1].endswith("version=" + hb.__version__)


def test_errors():
    with pytest.raises(hb.Error, match="InvalidInput"):
        hb.run_check("dim", {"bogus": 1})
    with pytest.raises(hb.Error):
        hb.compute_constants(4, 3)
