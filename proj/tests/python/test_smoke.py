"""Smoke tests for the python extension module."""

import json
import math

import pytest

import _shiftlab as sl

GOLDEN = [[1, 1], [1, 0]]
FULL2 = [[1, 1], [1, 1]]
TEETER = [[0, 0, 1], [0, 0, 1], [1, 1, 0]]


def test_count_words_fibonacci():
    # golden-mean word counts follow the Fibonacci recursion
    counts = [int(sl.count_words(GOLDEN, n)) for n in range(1, 10)]
    assert counts == [2, 3, 5, 8, 13, 21, 34, 55, 89]


def test_entropy_estimate():
    count, est = sl.entropy_estimate(GOLDEN, 32)
    phi = (1 + math.sqrt(5)) / 2
    assert abs(est - math.log(phi)) < 0.01
    count2, est2 = sl.entropy_estimate(FULL2, 20)
    assert int(count2) == 2**20
    assert est2 == pytest.approx(math.log(2))


def test_typical_count_and_certificate():
    count, log_count = sl.typical_count(FULL2, [0.5, 0.5], 16, 0.1)
    assert 0 < int(count) <= 2**16
    assert log_count == pytest.approx(math.log(int(count)))

    cert = sl.certify_separation(FULL2, [0.5, 0.5], 0.1, 0.1, 64)
    assert cert["certified"]
    assert 1 <= cert["n_star"] <= 64
    bound = math.log(2) - 0.1
    for row in cert["rows"]:
        if row["n"] >= cert["n_star"]:
            assert row["pass"]
            assert math.log(int(row["count"])) >= row["n"] * bound - 1e-9


def test_periodic_decomposition():
    dec = sl.periodic_decomposition(TEETER)
    assert dec["period"] == 2
    assert dec["class_of"] == [0, 0, 1]
    assert sl.periodic_decomposition(GOLDEN)["period"] == 1


def test_shadowing():
    # delta = 1/4 pseudo-orbit of length-3 prefixes in the golden-mean system
    pseudo = []
    cur = [0, 0, 0]
    for i in range(500):
        pseudo.append(cur)
        ext = (i * 7) % 2
        if cur[2] == 1 and ext == 1:  # 11 is forbidden
            ext = 0
        cur = [cur[1], cur[2], ext]
    traced = sl.shadow(GOLDEN, pseudo, 1, 4)
    assert [traced[i] for i in range(500)] == [p[0] for p in pseudo]
    assert all(not (a == 1 and b == 1) for a, b in zip(traced, traced[1:]))


def test_construct_resume_audit(tmp_path):
    (tmp_path / "family.json").write_text(json.dumps({
        "name": "binary",
        "levels": [{"alphabet_size": 2, "transitions": FULL2}],
    }))
    (tmp_path / "target.json").write_text(json.dumps({
        "vertices": [{"measure": {"type": "bernoulli", "p": ["1/2", "1/2"]}, "level": 1}],
    }))
    (tmp_path / "manifest.json").write_text(json.dumps({
        "family": "family.json",
        "target": "target.json",
        "u": "0",
        "eta": 0.4,
        "bands": 2,
        "seed": 7,
        "zeta1_cap": "1/8",
    }))

    info = sl.construct(str(tmp_path / "manifest.json"), str(tmp_path / "run"))
    assert info["bands"] == 2
    assert info["u"] == "0"

    ok, text = sl.audit(str(tmp_path / "run"), "tracking")
    assert ok
    assert text.startswith("checkpoint,band,distance,envelope,window_ok,pass")
    ok, text = sl.audit(str(tmp_path / "run"), "certificate", "json")
    assert ok
    report = json.loads(text)
    assert report["pairs_separated"] == report["pairs_checked"] == 100

    # interrupted run resumes to the identical stream
    sl.construct(str(tmp_path / "manifest.json"), str(tmp_path / "run2"), stop_after_band=1)
    sl.resume(str(tmp_path / "run2"))
    b1 = (tmp_path / "run" / "stream.syms").read_bytes()
    b2 = (tmp_path / "run2" / "stream.syms").read_bytes()
    assert b1 == b2


def test_template_json():
    for kind in ("system", "family", "measure", "target", "observable", "manifest"):
        json.loads(sl.template_json(kind))
    with pytest.raises(ValueError):
        sl.template_json("nonsense")
