import json

import numpy as np
import pytest

from discscat import io
from discscat.errors import InvalidProblem
from discscat.model import DensityProfile, ScatteringData


def test_float_format_round_trips_exactly():
    vals = [0.1, 1 / 3, -2.5e-300, 1e22, 123456789.123456789, 0.0]
    text = io.dumps({"v": vals})
    back = json.loads(text)["v"]
    assert back == vals
    assert "0.10000000000000001" in text


def test_non_finite_becomes_null():
    assert json.loads(io.dumps({"a": float("nan")}))["a"] is None


def test_dumps_is_deterministic():
    obj = {"a": np.arange(3.0) / 7, "b": {"c": [1, 2.5, True, None, "s"]}}
    assert io.dumps(obj) == io.dumps(obj)


def test_problem_missing_field_is_named():
    with pytest.raises(InvalidProblem, match="'boundary'"):
        io.problem_from_json({"density": {"alpha": 2, "a": 1}, "potential": {"kind": "zero"}})
    with pytest.raises(InvalidProblem, match="'a'"):
        io.problem_from_json({"density": {"alpha": 2}, "boundary": [1, 0, 0, 0, 0, 0],
                              "potential": {"kind": "zero"}})


def test_problem_parsing_and_overrides():
    prob = io.problem_from_json({
        "density": {"alpha": 2, "a": 1},
        "boundary": {"alpha0": 1, "alpha1": 0, "alpha2": 0, "beta0": 0, "beta1": 0, "beta2": 0},
        "potential": {"kind": "bump", "center": 2.5, "half_width": 1.0},
        "numerics": {"h_x": 0.02, "n_lambda": 1024},
        "tolerances": {"sup_error": 0.1}})
    assert prob.numerics.h_x == 0.02 and prob.numerics.n_lambda == 1024
    assert prob.tolerances["sup_error"] == 0.1
    assert prob.potential.support_bound == pytest.approx(3.5)
    assert np.max(prob.potential.values) == pytest.approx(1.0)
    with pytest.raises(InvalidProblem):
        io.numerics_from_json({"bogus": 1})


def test_random_bumps_depend_only_on_seed():
    p = DensityProfile(2.0, 1.0)
    blk = {"kind": "random_bumps", "seed": 7, "support": [1.5, 3.5]}
    q1 = io.potential_from_json(blk, p)
    q2 = io.potential_from_json(dict(blk), p)
    q3 = io.potential_from_json({**blk, "seed": 8}, p)
    assert np.array_equal(q1.values, q2.values)
    assert not np.array_equal(q1.values, q3.values)
    assert np.all(q1.values[q1.grid < 1.5] == 0)


def test_scattering_json_round_trip(tmp_path):
    lam = np.linspace(-2, 2, 6)
    sd = ScatteringData(lam, np.exp(-1j * lam / 3), np.array([0.4]), np.array([1.3]))
    path = tmp_path / "s.json"
    io.write_json(path, io.scattering_to_json(sd))
    back = io.scattering_from_json(io.read_json(path))
    assert np.array_equal(back.s_values, sd.s_values)
    assert np.array_equal(back.bound_states, sd.bound_states)


def test_csv_round_trip(tmp_path):
    x = np.linspace(0, 1, 4) / 3
    io.write_csv(tmp_path / "a.csv", ["x", "y"], [x, x ** 2])
    header, rows = io.read_csv(tmp_path / "a.csv")
    assert header == ["x", "y"]
    assert np.array_equal(rows[:, 1], x ** 2)


def test_bad_json_file(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    with pytest.raises(InvalidProblem):
        io.read_json(f)
