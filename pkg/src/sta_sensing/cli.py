"""Command-line entry point: ``sta-sensing <subcommand> [options]``.

Subcommands
-----------
synthesize   solve a pulse design and write its control waveform
spectrum     scan one or more pulse modes over the probe frequency
robustness   flip deficit map over a grid of control errors
fk           k-th Fourier coefficient of the modulation function per mode

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, load_preset, preset_names
from .constants import mhz_to_rad, rad_to_mhz
from .dynamics import StepTooLarge
from .pulse_shaper import (
    ErrorModel,
    NoBracketFound,
    OptimizerStalled,
    TopHatPulse,
    coupling_residual,
    derive_controls,
    design_pulse,
    error_integrals,
    error_objective,
    peak_rabi,
    tophat_shape,
)
from .sequence import PulseOverlap, fourier_fk, modulation_function, resonance_predictor
from .spectroscopy import (
    STA,
    Instantaneous,
    Scenario,
    TopHat,
    default_grid,
    dip_center,
    dip_depth,
    robustness_sweep,
    scan_spectrum,
    schedule_for,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
NUMERICAL_ERRORS = (NoBracketFound, OptimizerStalled, StepTooLarge, PulseOverlap, FloatingPointError)


class NumericalFailure(RuntimeError):
    pass


# --------------------------------------------------------------------------
# shared setup


def _design(cfg):
    p = cfg.pulse
    return design_pulse(p.k, p.lam, weight=p.weight, tol=p.tol, n_starts=p.n_starts, seed=p.seed,
                        strict=True, start_box=p.eta_start_box)


def _resonant_t_pi(cfg, target):
    """Physical STA duration: explicit, or lam T / k at the predicted resonance."""
    if cfg.pulse.t_pi_us > 0:
        return cfg.pulse.t_pi_us * 1e-6
    res = resonance_predictor(target, cfg.pulse.k)
    return cfg.pulse.lam * res.period_T / cfg.pulse.k


def _tophat_rabi(cfg, shape, t_pi):
    """Top-hat amplitude (rad/s): configured, or the STA peak."""
    if cfg.pulse.tophat_rabi_MHz > 0:
        return mhz_to_rad(cfg.pulse.tophat_rabi_MHz)
    return peak_rabi(shape.with_duration(t_pi))


def _grid(cfg, target):
    if cfg.grid.probe_MHz:
        return np.array(cfg.grid.probe_MHz) * 1e6
    return default_grid(
        target, cfg.pulse.k, cfg.sequence.n_xy8, cfg.grid.n_points, cfg.grid.half_width_linewidths
    )


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _modes(cfg, target, needed):
    """Pulse-mode objects for the labels in ``needed``."""
    shape = None
    if "sta" in needed or ("tophat" in needed and cfg.pulse.tophat_rabi_MHz <= 0):
        shape = _design(cfg)
    modes = {}
    for label in needed:
        if label == "ideal":
            modes[label] = Instantaneous()
        elif label == "sta":
            modes[label] = STA(shape)
        else:
            t_pi = None if shape is None else _resonant_t_pi(cfg, target)
            modes[label] = TopHat(_tophat_rabi(cfg, shape, t_pi))
    return modes


# --------------------------------------------------------------------------
# subcommands


def cmd_synthesize(cfg, args):
    """Solve a pulse design and write its control waveform."""
    target = cfg.build_target()
    p = cfg.pulse
    out = _out_dir(args)
    if p.shape == "tophat":
        shape = None if p.tophat_rabi_MHz > 0 else _design(cfg)
        rabi = _tophat_rabi(cfg, shape, _resonant_t_pi(cfg, target))
        pulse = TopHatPulse.from_rabi(rabi)
        wave = tophat_shape(pulse.t_pi, p.n_samples)
        report = {
            "shape": "tophat",
            "t_pi_us": pulse.t_pi * 1e6,
            "rabi_MHz": rad_to_mhz(rabi),
            "area_rad": wave.area,
        }
    else:
        shape = _design(cfg)
        pulse = shape.with_duration(_resonant_t_pi(cfg, target))
        wave = derive_controls(pulse, p.n_samples)
        i_delta, i_omega = error_integrals(pulse)
        report = {
            "shape": "sta",
            "k": shape.k,
            "lam": shape.lam,
            "alpha": shape.alpha,
            "eta1": shape.eta1,
            "eta2": shape.eta2,
            "residual_J": error_objective(shape, p.weight),
            "coupling_residual": float(coupling_residual(shape.alpha, shape.k, shape.lam)),
            "error_integral_delta": abs(i_delta),
            "error_integral_omega": abs(i_omega),
            "t_pi_us": pulse.t_pi * 1e6,
            "max_rabi_MHz": rad_to_mhz(wave.peak_rabi),
        }
    wave.to_csv(out / "waveform.csv")
    with open(out / "report.txt", "w") as fh:
        for key, val in report.items():
            line = f"{key} = {val!r}" if isinstance(val, float) else f"{key} = {val}"
            print(line)
            fh.write(line + "\n")
    return EXIT_OK


def cmd_spectrum(cfg, args):
    """Scan the configured pulse modes over the probe frequency."""
    target = cfg.build_target()
    grid = _grid(cfg, target)
    if grid.size == 0:
        raise ConfigError("grid is empty")
    base = Scenario(
        target, Instantaneous(), cfg.pulse.k, cfg.sequence.n_xy8, cfg.error_ensemble(),
        tuple(grid), cfg.integrator_config(),
    )
    modes = _modes(cfg, target, cfg.grid.modes)
    out = _out_dir(args)
    f_res = resonance_predictor(target, cfg.pulse.k).f_res
    results = {}
    for label, mode in modes.items():
        # the ideal reference never carries control errors
        errors = (ErrorModel(),) if label == "ideal" else base.errors
        scen = base.with_(mode=mode, errors=errors)
        res = scan_spectrum(scen, workers=args.threads or cfg.run.threads)
        results[label] = res
        res.to_csv(out / f"spectrum_{label}.csv")
        res.write_metadata(out / f"spectrum_{label}.meta.ini", cfg.to_ini())
        print(
            f"{label:7s} depth = {dip_depth(res):.6f}  "
            f"dip offset = {(dip_center(res) - f_res) / 1e3:+.4f} kHz  "
            f"invalid rows = {res.metadata['n_invalid']}"
        )
    if args.plot_data:
        _write_plot_data(out / "plot_data.csv", grid, f_res, results)
    if any(not np.any(r.valid) for r in results.values()):
        raise NumericalFailure("every grid point was invalid for at least one mode")
    return EXIT_OK


def _write_plot_data(path, grid, f_res, results):
    """One row per grid point: detuning from resonance and every mode's signal."""
    labels = list(results)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["probe_frequency_MHz", "detuning_kHz"] + [f"sigma_x_{m}" for m in labels])
        for i, f in enumerate(grid):
            row = [repr(float(f) / 1e6), repr(float(f - f_res) / 1e3)]
            writer.writerow(row + [repr(float(results[m].sigma_x[i])) for m in labels])


def cmd_robustness(cfg, args):
    """Perturbative and exact flip deficits over an error grid."""
    target = cfg.build_target()
    t_pi = _resonant_t_pi(cfg, target)
    if cfg.pulse.shape == "tophat":
        shape = None if cfg.pulse.tophat_rabi_MHz > 0 else _design(cfg)
        pulse = TopHatPulse.from_rabi(_tophat_rabi(cfg, shape, t_pi))
    else:
        pulse = _design(cfg).with_duration(t_pi)
    xd = mhz_to_rad(np.array(cfg.robustness.xi_delta_MHz))
    rmap = robustness_sweep(pulse, cfg.robustness.xi_omega, xd, cfg.integrator.steps_per_pulse)
    out = _out_dir(args)
    rmap.to_csv(out / "robustness.csv")
    print(f"max deficit: perturbative {rmap.perturbative.max():.3e}, exact {rmap.exact.max():.3e}")
    return EXIT_OK


def cmd_fk(cfg, args):
    """Modulation-function Fourier coefficient f_k at resonance per mode."""
    target = cfg.build_target()
    k = cfg.pulse.k
    period = resonance_predictor(target, k).period_T
    modes = _modes(cfg, target, cfg.grid.modes)
    out = _out_dir(args)
    bound = 4.0 / (k * math.pi)
    with open(out / "fk.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mode", "k", "period_us", "t_pi_us", "f_k", "optimum"])
        for label, mode in modes.items():
            sched = schedule_for(mode, k, 1, period)
            fk = fourier_fk(modulation_function(sched), k)
            writer.writerow([label, k] + [repr(float(v)) for v in (period * 1e6, sched.t_pi * 1e6, fk, bound)])
            print(f"{label:7s} f_{k} = {fk:+.8f}   |f_k| / (4/k pi) = {abs(fk) / bound:.6f}")
    return EXIT_OK


COMMANDS = {
    "synthesize": cmd_synthesize,
    "spectrum": cmd_spectrum,
    "robustness": cmd_robustness,
    "fk": cmd_fk,
}


# --------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="sta-sensing", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        p = sub.add_parser(name, help=func.__doc__)
        p.add_argument("--config", help="INI file; applied on top of --preset when both are given")
        p.add_argument("--preset", help=f"built-in scenario ({', '.join(preset_names())})")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--threads", type=int, default=None, help="worker processes for scans")
        p.add_argument("--plot-data", action="store_true", help="also write a merged plot-ready CSV")
    return parser


def resolve_config(args):
    cfg = load_preset(args.preset) if args.preset else RunConfig()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, *NUMERICAL_ERRORS) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
