"""Frequency scans, ensemble averages and the ideal / top-hat / STA comparison.

A spectrum is swept over the probe frequency f = k / T: every grid point
rebuilds the XY8 schedule at its own period (an STA shape keeps its
dimensionless design and rescales to t_pi = lam T / k) and records the NV
<sigma_x> after the full sequence.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constants import TWO_PI
from .dynamics import IntegratorConfig, exact_flip_infidelity, plus_x_states, propagate
from .pulse_shaper import ErrorModel, ShapeParams, TopHatPulse, peak_rabi, perturbative_infidelity
from .sequence import PulseOverlap, build_schedule, build_xy8, resonance_predictor


@dataclass(frozen=True)
class Instantaneous:
    """Zero-duration pi rotations."""

    label = "ideal"


@dataclass(frozen=True)
class TopHat:
    """Constant-amplitude pi pulses; ``rabi`` in rad/s."""

    rabi: float
    label = "tophat"

    def __post_init__(self):
        if not self.rabi > 0:
            raise ValueError("top-hat Rabi frequency must be positive")


@dataclass(frozen=True)
class STA:
    """Shaped pulses from a solved design, rescaled to t_pi = lam T / k."""

    shape: ShapeParams
    label = "sta"


@dataclass(frozen=True)
class Scenario:
    """One spectrum to compute.

    ``errors`` is a tuple of ErrorModel; more than one member means the
    spectrum is the ensemble mean. ``grid`` holds probe frequencies in Hz.
    """

    target: object
    mode: object
    k: int
    n_xy8: int
    errors: tuple = (ErrorModel(),)
    grid: tuple = ()
    integrator: IntegratorConfig = IntegratorConfig()

    def __post_init__(self):
        errors = (self.errors,) if isinstance(self.errors, ErrorModel) else tuple(self.errors)
        grid = tuple(float(f) for f in self.grid)
        if not errors:
            raise ValueError("error ensemble must be nonempty")
        if not grid:
            raise ValueError("scan grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("scan grid must be strictly increasing")
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError("k must be an odd positive integer")
        if self.n_xy8 < 1:
            raise ValueError("n_xy8 must be >= 1")
        object.__setattr__(self, "errors", errors)
        object.__setattr__(self, "grid", grid)

    def with_(self, **changes):
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return Scenario(**values)

    def digest(self):
        """Stable hash of everything that determines the output."""
        return hashlib.sha256(repr(self).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SpectrumResult:
    """Rows of (probe frequency [Hz], <sigma_x>); invalid rows hold NaN."""

    freqs: np.ndarray
    sigma_x: np.ndarray
    valid: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["probe_frequency_MHz", "sigma_x"])
            for f, s in zip(self.freqs, self.sigma_x):
                writer.writerow([repr(float(f) / 1e6), repr(float(s))])

    def write_metadata(self, path, echo=""):
        """Sidecar INI: a ``[metadata]`` section, then ``echo`` verbatim."""
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser["metadata"] = {key: str(val) for key, val in self.metadata.items()}
        with open(path, "w") as fh:
            parser.write(fh)
            fh.write(echo)


# --------------------------------------------------------------------------
# single points


def schedule_for(mode, k, n_xy8, period_T):
    if isinstance(mode, Instantaneous):
        return build_schedule(None, period_T, n_xy8)
    if isinstance(mode, TopHat):
        return build_schedule(TopHatPulse.from_rabi(mode.rabi), period_T, n_xy8)
    if isinstance(mode, STA):
        if mode.shape.k != k:
            raise ValueError(f"shape designed for k={mode.shape.k}, scenario uses k={k}")
        return build_xy8(mode.shape, period_T, n_xy8)
    raise TypeError(f"unknown pulse mode {mode!r}")


def point_signal(target, mode, k, n_xy8, err, freq, integrator=IntegratorConfig()):
    """<sigma_x> at one probe frequency; NaN if the pulses overlap.

    Nuclear targets average the two I_z initialisations.
    """
    try:
        sched = schedule_for(mode, k, n_xy8, k / freq)
    except PulseOverlap:
        return math.nan
    return propagate(plus_x_states(target), sched, target, err, integrator).sigma_x


def _point_task(args):
    return point_signal(*args)


def _run_tasks(tasks, workers):
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [_point_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map keeps submission order, so results come back in grid order
        return list(pool.map(_point_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# --------------------------------------------------------------------------
# spectra


def member_spectra(scenario, workers=1):
    """Per-member spectra, shape (n_members, n_grid)."""
    tasks = [
        (scenario.target, scenario.mode, scenario.k, scenario.n_xy8, err, f, scenario.integrator)
        for err in scenario.errors
        for f in scenario.grid
    ]
    values = np.array(_run_tasks(tasks, workers), dtype=float)
    return values.reshape(len(scenario.errors), len(scenario.grid))


def scan_spectrum(scenario, workers=1):
    """Spectrum of ``scenario``, averaged over its error ensemble."""
    t0 = time.perf_counter()
    per = member_spectra(scenario, workers)
    sig = per.mean(axis=0)
    valid = np.isfinite(sig)
    meta = {
        "mode": scenario.mode.label,
        "scenario_hash": scenario.digest(),
        "n_points": len(scenario.grid),
        "n_members": len(scenario.errors),
        "n_invalid": int(np.count_nonzero(~valid)),
        "steps_per_pulse": scenario.integrator.steps_per_pulse,
        "norm_tolerance": scenario.integrator.norm_tolerance,
        "runtime_s": round(time.perf_counter() - t0, 3),
    }
    return SpectrumResult(np.array(scenario.grid), sig, valid, meta)


def ensemble_average(scenario, workers=1):
    """Arithmetic mean of the member spectra on the shared grid."""
    if len(scenario.errors) == 0:
        raise ValueError("ensemble must be nonempty")
    return scan_spectrum(scenario, workers)


def default_grid(target, k, n_xy8, n_points=61, half_width=10.0):
    """Uniform probe grid (Hz) of +/- ``half_width`` linewidths around resonance.

    The linewidth is taken as 1 / total sequence time at resonance.
    """
    if n_points < 1:
        raise ValueError("grid needs at least one point")
    res = resonance_predictor(target, k)
    lw = 1.0 / (4 * n_xy8 * res.period_T)
    if n_points == 1:
        return np.array([res.f_res])
    return res.f_res + np.linspace(-half_width, half_width, n_points) * lw


def sta_peak_rabi(shape, target, k):
    """Peak |Omega| (rad/s) of ``shape`` rescaled to the resonant period."""
    res = resonance_predictor(target, k)
    return peak_rabi(shape.with_duration(shape.lam * res.period_T / k))


def compare_modes(scenario, tophat_rabi=None, workers=1):
    """Ideal, top-hat and STA spectra on the scenario's grid.

    ``scenario.mode`` must be STA. The ideal run is error free; top-hat and
    STA share the scenario errors. ``tophat_rabi`` (rad/s) defaults to the
    STA peak amplitude at resonance.
    """
    if not isinstance(scenario.mode, STA):
        raise TypeError("compare_modes needs an STA scenario")
    if tophat_rabi is None:
        tophat_rabi = sta_peak_rabi(scenario.mode.shape, scenario.target, scenario.k)
    return {
        "ideal": scan_spectrum(scenario.with_(mode=Instantaneous(), errors=(ErrorModel(),)), workers),
        "tophat": scan_spectrum(scenario.with_(mode=TopHat(tophat_rabi)), workers),
        "sta": scan_spectrum(scenario, workers),
    }


# --------------------------------------------------------------------------
# dip analysis


def dip_index(result):
    sig = np.where(result.valid, result.sigma_x, np.inf)
    return int(np.argmin(sig))


def dip_center(result):
    """Frequency (Hz) of the spectral minimum, refined by a parabola."""
    i = dip_index(result)
    f, s = result.freqs, result.sigma_x
    if 0 < i < len(f) - 1 and result.valid[i - 1] and result.valid[i + 1]:
        a, b = s[i - 1], s[i + 1]
        denom = a - 2 * s[i] + b
        if denom > 0:
            shift = 0.5 * (a - b) / denom
            return float(f[i] + shift * 0.5 * (f[i + 1] - f[i - 1]))
    return float(f[i])


def dip_depth(result):
    """Mean of the two edge values minus the minimum."""
    sig = result.sigma_x[result.valid]
    if sig.size == 0:
        return math.nan
    return float(0.5 * (sig[0] + sig[-1]) - sig.min())


def linewidth(scenario):
    """1 / total sequence time at resonance, in Hz."""
    res = resonance_predictor(scenario.target, scenario.k)
    return 1.0 / (4 * scenario.n_xy8 * res.period_T)


# --------------------------------------------------------------------------
# robustness


@dataclass(frozen=True)
class RobustnessMap:
    """Flip deficits over an error grid, indexed [i_omega, i_delta]."""

    xi_omega: np.ndarray
    xi_delta: np.ndarray
    perturbative: np.ndarray
    exact: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["xi_omega", "xi_delta_MHz", "deficit_perturbative", "deficit_exact"])
            for i, xo in enumerate(self.xi_omega):
                for j, xd in enumerate(self.xi_delta):
                    writer.writerow([
                        repr(float(xo)), repr(float(xd) / TWO_PI / 1e6),
                        repr(float(self.perturbative[i, j])), repr(float(self.exact[i, j])),
                    ])


def robustness_sweep(pulse, xi_omega, xi_delta, steps=2000):
    """Perturbative and exact flip deficits of ``pulse`` over a grid.

    ``xi_delta`` in rad/s. ``pulse`` needs a physical t_pi.
    """
    xo = np.atleast_1d(np.asarray(xi_omega, dtype=float))
    xd = np.atleast_1d(np.asarray(xi_delta, dtype=float))
    if not (np.all(np.isfinite(xo)) and np.all(np.isfinite(xd))):
        raise ValueError("error grids must be finite")
    pert = np.empty((xo.size, xd.size))
    exact = np.empty_like(pert)
    for i, a in enumerate(xo):
        for j, b in enumerate(xd):
            err = ErrorModel(float(a), float(b))
            pert[i, j] = perturbative_infidelity(pulse, err)
            exact[i, j] = exact_flip_infidelity(pulse, err, steps)
    return RobustnessMap(xo, xd, pert, exact)
