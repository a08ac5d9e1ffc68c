import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sta_sensing.cli import main
from sta_sensing.config import ConfigError, RunConfig, load_preset, parse_config, preset_names

SHORT = "[sequence]\nn_xy8 = 4\n[grid]\nn_points = 5\n"


def _write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _report(capsys):
    out = capsys.readouterr().out
    return dict(line.split(" = ", 1) for line in out.splitlines() if " = " in line)


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------- config


def test_presets_ship_and_parse():
    assert {"fig1a", "fig1d", "tophat"} <= set(preset_names())
    a = load_preset("fig1a")
    assert (a.pulse.k, a.pulse.lam, a.sequence.n_xy8) == (15, 7, 102)
    assert a.errors.xi_omega == (0.005,) and a.errors.xi_delta_MHz == (1.0,)
    d = load_preset("fig1d")
    assert d.target.kind == "classical" and len(d.error_ensemble()) == 10
    assert d.pulse.tophat_rabi_MHz == 40.0


@pytest.mark.parametrize("name", ["fig1a", "fig1d", "tophat"])
def test_config_round_trips_through_ini(name):
    cfg = load_preset(name)
    assert parse_config(cfg.to_ini()) == cfg


@given(
    k=st.sampled_from([1, 3, 15, 45]),
    n=st.integers(1, 500),
    xo=st.lists(st.floats(-0.1, 0.1, allow_nan=False), min_size=1, max_size=4),
    probe=st.lists(st.floats(1.0, 500.0), min_size=0, max_size=5, unique=True),
)
@settings(max_examples=40)
def test_config_round_trip_property(k, n, xo, probe):
    text = f"[pulse]\nk = {k}\n[sequence]\nn_xy8 = {n}\n[errors]\nxi_omega = {', '.join(map(repr, xo))}\n"
    if probe:
        text += f"[grid]\nprobe_MHz = {', '.join(map(repr, sorted(probe)))}\n"
    cfg = parse_config(text)
    assert parse_config(cfg.to_ini()) == cfg


@pytest.mark.parametrize(
    "text, match",
    [
        ("[grid]\nbogus = 1\n", "unknown key"),
        ("[nonsense]\na = 1\n", "unknown section"),
        ("[pulse]\nk = 14\n", "odd"),
        ("[pulse]\nk = seven\n", "pulse.k"),
        ("[target]\nb_z_T = -3\n", "b_z_T"),
        ("[grid]\nprobe_MHz =\n", "empty"),
        ("[grid]\nn_points = 0\n", "empty"),
        ("[grid]\nprobe_MHz = 3, 2\n", "increasing"),
        ("[errors]\nxi_omega = 0.1, 0.2\nxi_delta_MHz = 1, 2, 3\n", "broadcast"),
        ("[grid]\nmodes = ideal, fancy\n", "modes"),
        ("[target]\nkind = quantum\n", "kind"),
        ("[errors]\nxi_omega = nan\n", "xi_omega"),
        ("not an ini file", "unreadable"),
    ],
)
def test_bad_configs_are_rejected(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_keys_carry_units():
    import dataclasses

    allowed = {"kind", "shape", "k", "lam", "weight", "tol", "n_starts", "eta_start_box", "seed", "n_samples", "n_xy8",
               "xi_omega", "modes", "n_points", "half_width_linewidths", "steps_per_pulse",
               "norm_tolerance", "threads"}
    for sec in dataclasses.fields(RunConfig):
        for f in dataclasses.fields(sec.type if not isinstance(sec.type, str) else type(getattr(RunConfig(), sec.name))):
            assert f.name in allowed or f.name.split("_")[-1] in {"T", "MHz", "kHz", "us"}, f.name


# ---------------------------------------------------------------- synthesize


def test_synthesize_fig1a(tmp_path, capsys):
    assert main(["synthesize", "--preset", "fig1a", "--out", str(tmp_path)]) == 0
    rep = _report(capsys)
    assert float(rep["alpha"]) == pytest.approx(0.191173968392807, abs=1e-10)
    assert float(rep["residual_J"]) <= 1e-6
    assert abs(float(rep["coupling_residual"])) <= 1e-10
    assert float(rep["t_pi_us"]) == pytest.approx(0.2178, abs=1e-4)
    assert float(rep["max_rabi_MHz"]) == pytest.approx(39.56, abs=0.01)
    rows = _rows(tmp_path / "waveform.csv")
    assert rows[0] == ["t_s", "omega_rad_per_s", "delta_rad_per_s"]
    assert len(rows) == 2001
    assert (tmp_path / "report.txt").exists()


def test_synthesize_tophat_preset(tmp_path, capsys):
    assert main(["synthesize", "--preset", "tophat", "--out", str(tmp_path)]) == 0
    rep = _report(capsys)
    assert float(rep["area_rad"]) == pytest.approx(math.pi, rel=1e-12)
    omega = np.array([float(r[1]) for r in _rows(tmp_path / "waveform.csv")[1:]])
    assert np.ptp(omega) == 0.0


@pytest.mark.parametrize("k", [43, 45])
def test_synthesize_proton_design_duration(tmp_path, capsys, k):
    cfg = _write(tmp_path, f"[pulse]\nk = {k}\n")
    assert main(["synthesize", "--preset", "fig1d", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert float(_report(capsys)["t_pi_us"]) == pytest.approx(0.17, rel=0.03)


def test_narrow_start_box_finds_the_higher_peak_zero(tmp_path, capsys):
    # starts confined to [-0.5, 0.5]^2 only reach the 48.17 MHz zero of the error integrals
    cfg = _write(tmp_path, "[pulse]\neta_start_box = 0.5\nn_starts = 16\n")
    assert main(["synthesize", "--preset", "fig1a", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = _report(capsys)
    assert float(rep["max_rabi_MHz"]) == pytest.approx(48.17, abs=0.01)
    assert float(rep["residual_J"]) <= 1e-6


def test_synthesize_stall_exits_numerical(tmp_path, capsys):
    cfg = _write(tmp_path, "[pulse]\ntol = 1e-300\nn_starts = 1\n")
    assert main(["synthesize", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert "OptimizerStalled" in capsys.readouterr().err


# ---------------------------------------------------------------- spectrum


def test_spectrum_fig1a_writes_three_csvs(tmp_path):
    cfg = _write(tmp_path, SHORT)
    out = tmp_path / "out"
    assert main(["spectrum", "--preset", "fig1a", "--config", cfg, "--out", str(out), "--plot-data"]) == 0
    for mode in ("ideal", "tophat", "sta"):
        rows = _rows(out / f"spectrum_{mode}.csv")
        assert rows[0] == ["probe_frequency_MHz", "sigma_x"] and len(rows) == 6
        assert (out / f"spectrum_{mode}.meta.ini").exists()
    plot = _rows(out / "plot_data.csv")
    assert plot[0] == ["probe_frequency_MHz", "detuning_kHz", "sigma_x_ideal", "sigma_x_tophat", "sigma_x_sta"]
    assert float(plot[3][1]) == pytest.approx(0.0, abs=1e-6)


def test_spectrum_fig1d_averages_ensemble(tmp_path):
    cfg = _write(tmp_path, SHORT + "modes = sta\n")
    out = tmp_path / "out"
    assert main(["spectrum", "--preset", "fig1d", "--config", cfg, "--out", str(out)]) == 0
    assert sorted(p.name for p in out.glob("*.csv")) == ["spectrum_sta.csv"]
    meta = (out / "spectrum_sta.meta.ini").read_text()
    assert "n_members = 10" in meta


def test_sidecar_reparses_to_same_config(tmp_path):
    cfg_path = _write(tmp_path, SHORT + "modes = ideal\n")
    out = tmp_path / "out"
    assert main(["spectrum", "--preset", "fig1a", "--config", cfg_path, "--out", str(out)]) == 0
    echoed = parse_config((out / "spectrum_ideal.meta.ini").read_text())
    assert echoed == parse_config(open(cfg_path).read(), base=load_preset("fig1a"))


def test_spectrum_is_deterministic(tmp_path):
    cfg = _write(tmp_path, SHORT + "modes = sta, tophat\n")
    for d in ("a", "b"):
        assert main(["spectrum", "--preset", "fig1a", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for name in ("spectrum_sta.csv", "spectrum_tophat.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_empty_grid_writes_nothing(tmp_path, capsys):
    cfg = _write(tmp_path, "[grid]\nprobe_MHz =\n")
    out = tmp_path / "out"
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 2
    assert not out.exists()
    assert "empty" in capsys.readouterr().err


def test_config_errors_exit_2(tmp_path):
    assert main(["spectrum", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2
    assert main(["spectrum", "--preset", "nope", "--out", str(tmp_path)]) == 2
    assert main(["spectrum", "--threads", "0", "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as info:
        main(["spectrum", "--no-such-flag"])
    assert info.value.code == 2


def test_all_rows_invalid_exits_numerical(tmp_path):
    # a 0.1 MHz top-hat lasts 5 us, far longer than half a period
    cfg = _write(tmp_path, SHORT + "modes = tophat\n[pulse]\ntophat_rabi_MHz = 0.1\n")
    out = tmp_path / "out"
    assert main(["spectrum", "--preset", "fig1a", "--config", cfg, "--out", str(out)]) == 3
    rows = _rows(out / "spectrum_tophat.csv")
    assert all(r[1] == "nan" for r in rows[1:])


# ---------------------------------------------------------------- robustness, fk


def _robustness(tmp_path, text):
    out = tmp_path / "out"
    assert main(["robustness", "--preset", "fig1a", "--config", _write(tmp_path, text), "--out", str(out)]) == 0
    rows = _rows(out / "robustness.csv")
    assert rows[0] == ["xi_omega", "xi_delta_MHz", "deficit_perturbative", "deficit_exact"]
    return np.array([[float(x) for x in r] for r in rows[1:]])


def test_robustness_origin_point(tmp_path):
    data = _robustness(tmp_path, "[robustness]\nxi_omega = 0\nxi_delta_MHz = 0\n")
    assert data.shape == (1, 4)
    assert data[0, 2] <= 1e-6 and data[0, 3] <= 1e-6


def test_robustness_nominal_point(tmp_path):
    data = _robustness(tmp_path, "[robustness]\nxi_omega = 0.005\nxi_delta_MHz = 1.0\n")
    assert data[0, 3] <= 1e-2
    assert data[0, 3] == pytest.approx(1.0051e-5, rel=1e-3)


def test_robustness_symmetric_grid(tmp_path):
    data = _robustness(tmp_path, "[pulse]\nshape = tophat\n[robustness]\nxi_omega = -0.01, 0, 0.01\nxi_delta_MHz = -2, 0, 2\n")
    pert = data[:, 2].reshape(3, 3)
    np.testing.assert_allclose(pert, pert[::-1, ::-1], rtol=1e-12)


def test_fk_subcommand(tmp_path, capsys):
    assert main(["fk", "--preset", "fig1a", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "fk.csv")
    assert rows[0] == ["mode", "k", "period_us", "t_pi_us", "f_k", "optimum"]
    vals = {r[0]: float(r[4]) for r in rows[1:]}
    assert abs(vals["sta"]) == pytest.approx(4 / (15 * math.pi), rel=1e-9)
    assert abs(vals["ideal"]) == pytest.approx(4 / (15 * math.pi), rel=1e-12)
    assert abs(vals["tophat"]) < abs(vals["sta"])
