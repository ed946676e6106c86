import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gspin.config import ConfigError, bundled_config_path, load_config, parse_config, sweep_grid
from gspin.io import TraceRecord, dumps_csv, dumps_json, dumps_report, read_trace, sidecar_path, write_sidecar, write_trace
from gspin.simulate import simulate

RABI = """\
drive:
  b_mt: 0.5
sequence:
  kind: rabi
  mw_mhz: 689.0
  sweep_ns: {start: 0.0, stop: 100.0, step: 10.0}
run:
  seed: 3
"""

BUNDLED = ["fig1c", "fig1d", "fig2c", "fig3a", "fig3b_plus", "fig3b_minus", "fig3c_plus",
           "fig3c_minus", "fig4a", "fig4b", "fig4f_plus", "fig4f_minus"]


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_load(name):
    cfg = load_config(bundled_config_path(name))
    cfg.build_system()
    assert sweep_grid(cfg).size > 1


def test_grid_inclusive():
    cfg = parse_config(RABI)
    np.testing.assert_allclose(sweep_grid(cfg), np.arange(0, 101, 10.0))


def test_unknown_key_reports_line():
    text = RABI.replace("  b_mt: 0.5", "  b_mt: 0.5\n  b_gauss: 5")
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "x.yaml")
    msg = str(exc.value)
    assert "x.yaml:3" in msg and "b_gauss" in msg


def test_bad_value_reports_line_and_field():
    text = RABI.replace("mw_mhz: 689.0", "mw_mhz: -5")
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "x.yaml")
    assert "x.yaml:5: sequence.mw_mhz" in str(exc.value)


@pytest.mark.parametrize("text", [
    "- a\n- b\n",
    "sequence: {kind: echo}\n",
    RABI.replace("seed: 3", "seed: -1"),
    RABI.replace("start: 0.0", "start: -10.0"),
    RABI + "defect:\n  t2star_plus_us: 0\n",
    "sequence: [unclosed\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.yaml")


def test_perturbations_and_lines_exclusive():
    text = RABI + (
        "defect:\n  perturbations: [{}, {}, {}, {}, {}, {}]\n"
        "  fine_lines: {nu_plus_mhz: [689,689,689,689,689,689], nu_minus_mhz: [1721,1721,1721,1721,1721,1721]}\n")
    with pytest.raises(ConfigError, match="either"):
        parse_config(text)


def test_hash_deterministic_and_sensitive():
    a, b = parse_config(RABI), parse_config("# comment\n" + RABI)
    assert a.digest() == b.digest()
    c = parse_config(RABI.replace("seed: 3", "seed: 4"))
    assert a.digest() != c.digest()
    # defaults are part of the canonical form
    d = parse_config(RABI.replace("run:", "run:\n  repetitions: 1"))
    assert a.digest() == d.digest()


def test_simulate_meta(tmp_path):
    cfg = parse_config(RABI)
    rec = simulate(cfg)
    assert rec.meta["config_hash"] == cfg.digest()
    assert rec.meta["seed"] == 3 and simulate(cfg, seed=9).meta["seed"] == 9
    np.testing.assert_allclose(rec.sweep, np.arange(0, 101, 10.0) / 1000)


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 20).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=finite), arrays(float, n, elements=finite),
    arrays(float, n, elements=st.floats(0, 1e3)))), st.sampled_from(["csv", "json"]))
def test_roundtrip_stable(tmp_path_factory, cols, fmt):
    path = tmp_path_factory.mktemp("rt") / f"t.{fmt}"
    rec = TraceRecord(*cols)
    write_trace(rec, path, fmt)
    first = path.read_text()
    back = read_trace(path)
    np.testing.assert_allclose(back.signal, rec.signal, rtol=1e-8, atol=1e-300)
    write_trace(back, path, fmt)
    assert path.read_text() == first


def test_csv_header_and_optional_sigma(tmp_path):
    rec = TraceRecord([1.0, 2.0], [0.5, 0.25], [0.0, 0.0])
    assert dumps_csv(rec).splitlines()[0] == "sweep,signal,sigma"
    p = tmp_path / "a.csv"
    p.write_text("sweep,signal\n1,2\n3,4\n")
    back = read_trace(p)
    np.testing.assert_array_equal(back.sigma, [0, 0])
    assert back.weights() is None


def test_bad_trace_files(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n1,2\n")
    with pytest.raises(ValueError):
        read_trace(p)
    p.write_text("")
    with pytest.raises(ValueError):
        read_trace(p)
    with pytest.raises(ValueError):
        TraceRecord([1, 2], [1], [1])
    with pytest.raises(ValueError):
        TraceRecord([1], [1], [-1])


def test_sidecar(tmp_path):
    path = tmp_path / "trace.csv"
    write_trace(TraceRecord([1.0], [2.0], [0.1]), path)
    side = write_sidecar(path, {"seed": 1})
    assert side == sidecar_path(path) == tmp_path / "trace.meta.json"
    meta = json.loads(side.read_text())
    assert meta["seed"] == 1 and "timestamp" in meta
    assert read_trace(path).meta["seed"] == 1


def test_report_rounding():
    text = dumps_report({"b": np.float64(1 / 3), "a": [np.inf, np.int64(2), True]})
    assert json.loads(text) == {"a": [None, 2, True], "b": 0.333333333}
    assert dumps_json(TraceRecord([0.1], [1 / 3], [0])).count("0.333333333") == 1
