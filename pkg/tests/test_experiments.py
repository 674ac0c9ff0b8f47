import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from codedspline import experiments as ex
from codedspline.errors import ConfigError, NotFound, SlopeUndefined

MINIMAL = {"function_id": "identity", "K": 10, "N_list": [64, 128], "gamma_rule": {"power": 0.5}}


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return p


def test_minimal_config_gets_defaults(tmp_path):
    cfg = ex.parse_config(write(tmp_path, MINIMAL))
    assert (cfg.J, cfg.C_lambda, cfg.lambda_e, cfg.repetitions) == (1.0, 1.0, 0.0, 20)
    assert cfg.strategy == "cluster_max" and cfg.master_seed == 0


def test_round_trip(tmp_path):
    cfg = ex.parse_config(write(tmp_path, {**MINIMAL, "J": 2.5, "strategy": "random_uniform", "master_seed": 9}))
    again = ex.parse_config(write(tmp_path, ex.emit_config(cfg), "again.json"))
    assert again == cfg


def test_geometric_schedule(tmp_path):
    raw = {k: v for k, v in MINIMAL.items() if k != "N_list"}
    cfg = ex.parse_config(write(tmp_path, {**raw, "N_min": 128, "N_max": 8192, "points": 7}))
    assert cfg.N_list == (128, 256, 512, 1024, 2048, 4096, 8192)


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"gamma_rule": {"power": 1.0}}, "gamma_rule"),
        ({"gamma_rule": {"power": -0.1}}, "gamma_rule"),
        ({"gamma_rule": {"fixed": 2.5}}, "gamma_rule"),
        ({"gamma_rule": {"linear": 1}}, "gamma_rule"),
        ({"function_id": "lenet5"}, "function_id"),
        ({"N_list": [128, 64]}, "N_list"),
        ({"N_list": [4, 64]}, "N_list"),
        ({"K": 2}, "K"),
        ({"repetitions": 0}, "repetitions"),
        ({"strategy": "flip"}, "strategy"),
        ({"J": -1}, "J"),
        ({"J": "big"}, "J"),
        ({"lambda_e": -0.1}, "lambda_e"),
        ({"master_seed": -1}, "master_seed"),
        ({"input_distribution": "normal"}, "input_distribution"),
    ],
)
def test_invalid_fields(tmp_path, patch, field):
    with pytest.raises(ConfigError) as err:
        ex.parse_config(write(tmp_path, {**MINIMAL, **patch}))
    assert err.value.field == field


@pytest.mark.parametrize("missing", ["function_id", "N_list", "gamma_rule"])
def test_missing_fields(tmp_path, missing):
    raw = {k: v for k, v in MINIMAL.items() if k != missing}
    with pytest.raises(ConfigError) as err:
        ex.parse_config(write(tmp_path, raw))
    assert err.value.field == missing


def test_not_json(tmp_path):
    with pytest.raises(ConfigError):
        ex.parse_config(write(tmp_path, "{not json"))


@pytest.mark.parametrize("a, N, gamma", [(0.5, 4096, 64), (0.5, 128, 11), (0.8, 1024, 256), (0.0, 1000, 1)])
def test_gamma_rule(a, N, gamma):
    assert ex.GammaRule("power", a).gamma(N) == gamma


def test_identity_sweep_is_exact(tmp_path):
    cfg = ex.config_from_dict({**MINIMAL, "N_list": [64], "strategy": "none", "repetitions": 3,
                               "input_distribution": "grid"})
    rows = ex.run_sweep(cfg, tmp_path / "s.csv")
    assert rows[0].mean_error <= 1e-6


def test_csv_format_and_determinism(tmp_path):
    cfg = ex.config_from_dict({"function_id": "xsinx", "K": 10, "N_list": [64, 128, 256],
                               "gamma_rule": {"power": 0.5}, "repetitions": 3, "master_seed": 42})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    rows = ex.run_sweep(cfg, a)
    ex.run_sweep(cfg, b)
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert "\r" not in text
    lines = text.split("\n")
    assert lines[0] == "N,gamma,lambda_d,mean_error,stddev,repetitions,seed"
    assert lines[1].startswith("64,8,")
    assert float(lines[1].split(",")[3]) == rows[0].mean_error
    assert ex.read_rows(a) == rows
    assert (tmp_path / "a_loglog.csv").exists()


def test_sweep_lambda_in_bracket():
    cfg = ex.config_from_dict({"function_id": "cubic", "K": 10, "N_list": [32, 64, 128],
                               "gamma_rule": {"fixed": 5}, "repetitions": 1, "C_lambda": 1.0})
    for r in ex.run_sweep(cfg):
        assert r.N ** -4.0 < r.lambda_d <= 1.0


def test_partial_csv_survives_failure(tmp_path, monkeypatch):
    cfg = ex.config_from_dict({**MINIMAL, "N_list": [64, 128, 256], "repetitions": 1})
    calls = {"n": 0}
    real = ex.run_repeated

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 2:
            raise RuntimeError("worker crashed")
        return real(*args, **kwargs)

    monkeypatch.setattr(ex, "run_repeated", flaky)
    out = tmp_path / "p.csv"
    with pytest.raises(RuntimeError):
        ex.run_sweep(cfg, out)
    assert len(out.read_text().strip().split("\n")) == 2


def test_xsinx_sweep_decreases():
    cfg = ex.config_from_dict({"function_id": "xsinx", "K": 10, "N_list": [2**k for k in range(7, 13)],
                               "gamma_rule": {"power": 0.5}})
    errs = [r.mean_error for r in ex.run_sweep(cfg)]
    assert all(b < a for a, b in zip(errs, errs[1:])), errs


@pytest.mark.parametrize(
    "err, slope, intercept",
    [(lambda N: 1 / N, -1.0, 0.0), (lambda N: 5 * N**-2.0, -2.0, math.log(5)), (lambda N: 0.3, 0.0, math.log(0.3))],
)
def test_fit_slope_exact(err, slope, intercept):
    fit = ex.fit_slope([(N, err(N)) for N in (64, 128, 256, 512)])
    assert fit["slope"] == pytest.approx(slope, abs=1e-9)
    assert fit["intercept"] == pytest.approx(intercept, abs=1e-9)
    assert fit["r_squared"] == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-6, 1e3), min_size=3, max_size=8), st.floats(1e-3, 1e3))
def test_fit_slope_scale_invariance(errs, c):
    rows = [(2 ** (k + 5), e) for k, e in enumerate(errs)]
    a = ex.fit_slope(rows)
    b = ex.fit_slope([(N, c * e) for N, e in rows])
    assert b["slope"] == pytest.approx(a["slope"], abs=1e-9)
    assert b["intercept"] - a["intercept"] == pytest.approx(math.log(c), abs=1e-9)


@pytest.mark.parametrize("rows", [[(64, 1.0), (128, 0.0), (256, 0.1)], [(64, 1.0), (128, -1.0), (256, 0.1)], [(64, 1.0), (128, 0.5)]])
def test_fit_slope_undefined(rows):
    with pytest.raises(SlopeUndefined):
        ex.fit_slope(rows)


@pytest.mark.parametrize("suite", ["splines", "kernels", "norms", "impossibility"])
def test_validate_suites_pass(suite):
    rep = ex.validate(suite)
    assert rep.passed, rep.lines()


def test_validate_unknown_suite():
    with pytest.raises(NotFound):
        ex.validate("everything")
