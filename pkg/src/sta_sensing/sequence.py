"""XY8 schedules, their modulation function and its Fourier coefficients.

One sequence period T carries two pi pulses centred at T/4 and 3T/4. The
sensor's sigma_z picks up the modulation F(t): +/-1 between pulses and
+/-cos(theta) while a pulse is running.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .constants import TWO_PI
from .pulse_shaper import ShapeParams
from .quadrature import unit_rule

X_PHASE = 0.0
Y_PHASE = -0.5 * math.pi
XY8_PATTERN = (X_PHASE, Y_PHASE, X_PHASE, Y_PHASE, Y_PHASE, X_PHASE, Y_PHASE, X_PHASE)


class PulseOverlap(ValueError):
    """Adjacent pulses would overlap (t_pi >= T/2)."""


@dataclass(frozen=True)
class SequenceSchedule:
    """Timed XY8 pulse train.

    ``pulse`` is a ShapeParams, a TopHatPulse, or None for instantaneous
    pulses. Times in seconds.
    """

    period_T: float
    n_xy8: int
    pulse: object = None

    def __post_init__(self):
        if int(self.n_xy8) != self.n_xy8 or self.n_xy8 < 0:
            raise ValueError("n_xy8 must be a non-negative integer")
        if not self.period_T > 0:
            raise ValueError("period_T must be positive")
        if self.t_pi >= 0.5 * self.period_T:
            raise PulseOverlap(
                f"t_pi = {self.t_pi:.6g} s does not fit half a period T/2 = {0.5 * self.period_T:.6g} s"
            )

    @property
    def t_pi(self):
        return 0.0 if self.pulse is None else float(self.pulse.t_pi)

    @property
    def n_periods(self):
        return 4 * self.n_xy8

    @property
    def n_pulses(self):
        return 8 * self.n_xy8

    @property
    def total_time(self):
        return self.n_periods * self.period_T

    @property
    def pulse_centers(self):
        j = np.arange(self.n_periods)[:, None]
        return ((j + np.array([0.25, 0.75])) * self.period_T).ravel()

    @property
    def phases(self):
        return np.tile(np.array(XY8_PATTERN), self.n_xy8)

    @property
    def modulation_frequency(self):
        return TWO_PI / self.period_T

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["pulse_index", "center_s", "phase_rad", "t_pi_s"])
            for i, (c, p) in enumerate(zip(self.pulse_centers, self.phases)):
                writer.writerow([i, repr(float(c)), repr(float(p)), repr(self.t_pi)])


def build_schedule(pulse, period_T, n_xy8):
    """XY8 schedule for any pulse object (or None) without a duration rule."""
    return SequenceSchedule(float(period_T), int(n_xy8), pulse)


def build_xy8(shape, period_T, n_xy8):
    """XY8 schedule for an STA shape, rescaled to t_pi = lam T / k.

    Raises PulseOverlap when lam / k >= 1/2.
    """
    if n_xy8 < 1:
        raise ValueError("n_xy8 must be >= 1")
    if not isinstance(shape, ShapeParams):
        raise TypeError("build_xy8 needs ShapeParams; use build_schedule for other pulses")
    t_pi = shape.lam * period_T / shape.k
    return build_schedule(shape.with_duration(t_pi), period_T, n_xy8)


@dataclass(frozen=True)
class ModulationProfile:
    """F(t) over one period [0, T).

    ``segments`` holds (start, end, sign, in_pulse): free segments carry F =
    sign, pulse segments F = sign * cos(theta((t - start) / t_pi)).
    """

    period_T: float
    pulse: object
    segments: tuple

    def __call__(self, t):
        t = np.mod(np.asarray(t, dtype=float), self.period_T)
        out = np.empty_like(t)
        for start, end, sign, in_pulse in self.segments:
            sel = (t >= start) & (t < end) if end < self.period_T else (t >= start)
            if in_pulse:
                out[sel] = sign * np.cos(self.pulse.theta((t[sel] - start) / self.pulse.t_pi))
            else:
                out[sel] = sign
        return out

    def segment_integral(self, f, n_panels=64):
        """Integral of F(t) f(t) over the period, panel-wise Gauss-Legendre."""
        s, w = unit_rule(n_panels)
        total = 0.0
        for start, end, sign, in_pulse in self.segments:
            if end <= start:
                continue
            t = start + (end - start) * s
            vals = sign * (np.cos(self.pulse.theta(s)) if in_pulse else 1.0) * f(t)
            total += (end - start) * np.dot(w, vals)
        return total


def modulation_function(schedule):
    """One-period modulation profile of a schedule."""
    T = schedule.period_T
    half = 0.5 * schedule.t_pi
    c1, c2 = 0.25 * T, 0.75 * T
    if schedule.pulse is None:
        segs = ((0.0, c1, 1.0, False), (c1, c2, -1.0, False), (c2, T, 1.0, False))
    else:
        segs = (
            (0.0, c1 - half, 1.0, False),
            (c1 - half, c1 + half, 1.0, True),
            (c1 + half, c2 - half, -1.0, False),
            (c2 - half, c2 + half, -1.0, True),
            (c2 + half, T, 1.0, False),
        )
    return ModulationProfile(T, schedule.pulse, segs)


def fourier_fk(profile, k, n_panels=None):
    """f_k = (2/T) int_0^T F(t) cos(k w_m t) dt."""
    if int(k) != k or k < 1 or k % 2 == 0:
        raise ValueError("k must be an odd positive integer")
    w_k = k * TWO_PI / profile.period_T
    n_panels = n_panels or max(64, 4 * int(k))
    return 2.0 / profile.period_T * profile.segment_integral(lambda t: np.cos(w_k * t), n_panels)


@dataclass(frozen=True)
class Resonance:
    f_res: float
    period_T: float
    k: int


def resonance_predictor(target, k):
    """Probe frequency (Hz) at which k w_m meets the target frequency, and T = k / f."""
    f_res = target.resonance / TWO_PI
    return Resonance(f_res, k / f_res, int(k))
