"""Error-robust extended pi pulses designed by inverse engineering.

The qubit state during a pulse is parametrized as

    |phi> = [cos(theta/2) e^{i beta/2} |1> + sin(theta/2) e^{-i beta/2} |0>] e^{i gamma}

and the controls Omega(t), delta(t) are read off from prescribed angle
trajectories.  All shape parameters live on the normalized time
``s = t / t_pi`` in [0, 1], so a solved design is reused at any duration and
only the control amplitudes scale as 1 / t_pi.

Angle trajectories:

    theta(s) = pi/2 - (pi/2) cos(pi s) + alpha sin(2 pi lam s)
    gamma    = theta + eta1 sin(2 theta) + eta2 sin(4 theta)
    cot beta = -2 M sin(theta),  M = 1 + 2 eta1 cos(2 theta) + 4 eta2 cos(4 theta)

``alpha`` nulls the overlap of cos(theta) with the probed harmonic of the
sequence (coupling condition), and (eta1, eta2) null the first-order
response of the flip to Rabi-amplitude and detuning errors.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .quadrature import panels_for, unit_rule

__all__ = [
    "ShapeParams",
    "TopHatPulse",
    "ErrorModel",
    "ControlWaveform",
    "EtaSolution",
    "NoBracketFound",
    "OptimizerStalled",
    "eval_theta",
    "theta_rate",
    "eval_gamma",
    "eval_beta",
    "beta_slope",
    "m_factor",
    "coupling_residual",
    "solve_alpha",
    "error_integrals",
    "error_objective",
    "optimize_etas",
    "design_pulse",
    "derive_controls",
    "controls_from_angles",
    "parametrized_state",
    "perturbative_infidelity",
    "tophat_shape",
    "peak_rabi",
]


class NoBracketFound(RuntimeError):
    """The coupling residual never changes sign on the scanned alpha range."""


class OptimizerStalled(RuntimeError):
    """Multi-start search for (eta1, eta2) ended above the requested residual."""

    def __init__(self, message, starts):
        super().__init__(message)
        self.starts = starts


@dataclass(frozen=True)
class ErrorModel:
    """Static control errors: Omega -> Omega (1 + xi_omega), delta -> delta + xi_delta.

    ``xi_delta`` is an angular frequency (rad/s).
    """

    xi_omega: float = 0.0
    xi_delta: float = 0.0

    def scaled(self, factor):
        return ErrorModel(self.xi_omega * factor, self.xi_delta * factor)

    def __neg__(self):
        return self.scaled(-1.0)

    @property
    def is_zero(self):
        return self.xi_omega == 0.0 and self.xi_delta == 0.0


@dataclass(frozen=True)
class ShapeParams:
    """Dimensionless STA pulse design plus its physical duration.

    Parameters
    ----------
    k : int
        Odd harmonic of the decoupling sequence that carries the coupling.
    lam : int
        Number of carrier oscillations inside the pulse; fixes
        ``t_pi = lam * T / k`` once the sequence period T is chosen.
    alpha, eta1, eta2 : float
        Angle-ansatz coefficients.
    t_pi : float
        Pulse duration in seconds.
    """

    k: int
    lam: int
    alpha: float = 0.0
    eta1: float = 0.0
    eta2: float = 0.0
    t_pi: float = 1.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1 or self.k % 2 == 0:
            raise ValueError(f"k must be an odd positive integer, got {self.k!r}")
        if int(self.lam) != self.lam or self.lam < 1:
            raise ValueError(f"lam must be a positive integer, got {self.lam!r}")
        if not self.t_pi > 0:
            raise ValueError(f"t_pi must be positive, got {self.t_pi!r}")

    def with_duration(self, t_pi):
        return dataclasses.replace(self, t_pi=float(t_pi))

    def with_etas(self, eta1, eta2):
        return dataclasses.replace(self, eta1=float(eta1), eta2=float(eta2))

    # Pulse protocol shared with TopHatPulse: angles on normalized time and
    # controls on physical time.
    def theta(self, s):
        return eval_theta(self, s)

    def theta_prime(self, s):
        return _theta_prime(self, s)

    def gamma(self, s):
        return eval_gamma(self, eval_theta(self, s))

    def beta(self, s):
        return eval_beta(self, eval_theta(self, s))

    def controls(self, t):
        return _closed_form_controls(self, np.asarray(t, dtype=float) / self.t_pi)


@dataclass(frozen=True)
class TopHatPulse:
    """Constant-amplitude, zero-detuning pi pulse: theta = pi s, beta = pi/2."""

    t_pi: float

    def __post_init__(self):
        if not self.t_pi > 0:
            raise ValueError(f"t_pi must be positive, got {self.t_pi!r}")

    @classmethod
    def from_rabi(cls, rabi):
        """Top-hat pulse for a Rabi frequency ``rabi`` in rad/s."""
        return cls(math.pi / rabi)

    @property
    def rabi(self):
        return math.pi / self.t_pi

    def with_duration(self, t_pi):
        return TopHatPulse(float(t_pi))

    def theta(self, s):
        return math.pi * np.asarray(s, dtype=float)

    def theta_prime(self, s):
        return np.full_like(np.asarray(s, dtype=float), math.pi)

    def gamma(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def beta(self, s):
        return np.full_like(np.asarray(s, dtype=float), math.pi / 2)

    def controls(self, t):
        t = np.asarray(t, dtype=float)
        return np.full_like(t, self.rabi), np.zeros_like(t)


@dataclass(frozen=True)
class ControlWaveform:
    """Sampled controls of one pi pulse.

    ``omega`` and ``delta`` are in rad/s, ``t`` in seconds. ``phase_axis`` is
    0 for an X pulse and -pi/2 for a Y pulse.
    """

    t: np.ndarray
    omega: np.ndarray
    delta: np.ndarray
    t_pi: float
    phase_axis: float = 0.0

    def __post_init__(self):
        for name in ("t", "omega", "delta"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (len(self.t) == len(self.omega) == len(self.delta)):
            raise ValueError("t, omega and delta must have equal length")
        if len(self.t) < 2 or np.any(np.diff(self.t) <= 0):
            raise ValueError("time grid must be strictly increasing with >= 2 samples")
        if not (np.all(np.isfinite(self.omega)) and np.all(np.isfinite(self.delta))):
            raise ValueError("non-finite control sample")

    @property
    def peak_rabi(self):
        return float(np.max(np.abs(self.omega)))

    @property
    def area(self):
        """Time integral of omega (trapezoid rule on the sample grid)."""
        return float(np.trapezoid(self.omega, self.t))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t_s", "omega_rad_per_s", "delta_rad_per_s"])
            for row in zip(self.t, self.omega, self.delta):
                writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class EtaSolution:
    eta1: float
    eta2: float
    residual: float
    converged: bool
    starts: tuple = field(default=(), repr=False)

    @property
    def best_effort(self):
        return not self.converged


# --------------------------------------------------------------------------
# angle ansatz


def eval_theta(params, s):
    s = np.asarray(s, dtype=float)
    return (
        0.5 * math.pi
        - 0.5 * math.pi * np.cos(math.pi * s)
        + params.alpha * np.sin(2.0 * math.pi * params.lam * s)
    )


def _theta_prime(params, s):
    """d theta / d s."""
    s = np.asarray(s, dtype=float)
    w = 2.0 * math.pi * params.lam
    return 0.5 * math.pi**2 * np.sin(math.pi * s) + params.alpha * w * np.cos(w * s)


def theta_rate(params, s):
    """d theta / d t in rad/s at normalized time ``s``."""
    return _theta_prime(params, s) / params.t_pi


def eval_gamma(params, theta):
    theta = np.asarray(theta, dtype=float)
    return theta + params.eta1 * np.sin(2.0 * theta) + params.eta2 * np.sin(4.0 * theta)


def m_factor(params, theta):
    """M = d gamma / d theta, and its derivative dM / d theta."""
    theta = np.asarray(theta, dtype=float)
    m = 1.0 + 2.0 * params.eta1 * np.cos(2.0 * theta) + 4.0 * params.eta2 * np.cos(4.0 * theta)
    dm = -4.0 * params.eta1 * np.sin(2.0 * theta) - 16.0 * params.eta2 * np.sin(4.0 * theta)
    return m, dm


def eval_beta(params, theta):
    """Azimuthal angle on the branch (0, pi), i.e. sin(beta) > 0."""
    theta = np.asarray(theta, dtype=float)
    m, _ = m_factor(params, theta)
    x = 2.0 * m * np.sin(theta)
    return np.arccos(-x / np.sqrt(1.0 + x * x))


def beta_slope(params, theta):
    """Analytic d beta / d theta."""
    theta = np.asarray(theta, dtype=float)
    m, dm = m_factor(params, theta)
    sin_t = np.sin(theta)
    q = 1.0 + 4.0 * m * m * sin_t * sin_t
    return 2.0 * (dm * sin_t + m * np.cos(theta)) / q


def _closed_form_controls(params, s):
    # Omega = theta_dot / sin(beta), delta = theta_dot cot(theta) cot(beta) - beta_dot,
    # simplified with cot(beta) = -2 M sin(theta); regular at theta in {0, pi}.
    theta = eval_theta(params, s)
    rate = theta_rate(params, s)
    m, _ = m_factor(params, theta)
    sin_t = np.sin(theta)
    omega = rate * np.sqrt(1.0 + 4.0 * m * m * sin_t * sin_t)
    delta = -2.0 * m * rate * np.cos(theta) - beta_slope(params, theta) * rate
    return omega, delta


def controls_from_angles(params, s, fd_step=1e-6):
    """Controls by direct inversion of the auxiliary equations.

    Uses Omega = theta_dot / sin(beta) and
    delta = theta_dot cot(theta) cot(beta) - beta_dot with beta_dot from a
    central finite difference of beta(theta(s)). Singular at theta in
    {0, pi}; intended for cross-checking the closed forms at interior points.
    """
    s = np.asarray(s, dtype=float)
    theta = eval_theta(params, s)
    beta = eval_beta(params, theta)
    rate = theta_rate(params, s)
    beta_dot = (
        eval_beta(params, eval_theta(params, s + fd_step))
        - eval_beta(params, eval_theta(params, s - fd_step))
    ) / (2.0 * fd_step * params.t_pi)
    omega = rate / np.sin(beta)
    delta = rate / np.tan(theta) / np.tan(beta) - beta_dot
    return omega, delta


def derive_controls(params, n_samples=2000, phase_axis=0.0):
    """Sample Omega(t), delta(t) of a pulse on a uniform grid over [0, t_pi]."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    s = np.linspace(0.0, 1.0, int(n_samples))
    if isinstance(params, ShapeParams):
        omega, delta = _closed_form_controls(params, s)
    else:
        omega, delta = params.controls(s * params.t_pi)
    return ControlWaveform(s * params.t_pi, omega, delta, params.t_pi, phase_axis)


def tophat_shape(t_pi, n_samples=2000):
    """Constant-amplitude pi pulse of duration ``t_pi``: Omega = pi / t_pi, delta = 0."""
    return derive_controls(TopHatPulse(t_pi), n_samples)


def parametrized_state(pulse, s):
    """Bloch-parametrized state (global phase dropped), shape (len(s), 2).

    Basis order is (|1>, |0>).
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    theta = pulse.theta(s)
    beta = pulse.beta(s)
    return np.stack(
        [np.cos(theta / 2) * np.exp(0.5j * beta), np.sin(theta / 2) * np.exp(-0.5j * beta)],
        axis=-1,
    )


def peak_rabi(params, n_samples=20001):
    """max |Omega(t)| in rad/s, evaluated on a fine grid."""
    s = np.linspace(0.0, 1.0, n_samples)
    omega, _ = params.controls(s * params.t_pi)
    return float(np.max(np.abs(omega)))


# --------------------------------------------------------------------------
# coupling condition


def _carrier_phase(k, lam):
    # Phase of cos(k w_m t) at the start of a pulse centred at T/4 when
    # t_pi = lam T / k; the pulse centred at 3T/4 gives the same condition.
    return 0.5 * math.pi * k - math.pi * lam


def coupling_residual(alpha, k, lam, n_panels=None):
    """Overlap of cos(theta) with the k-th harmonic inside the pulse.

    Evaluates  int_0^1 cos(theta(s)) cos(k w_m t(s)) ds  with t(s) the
    sequence time of a pulse centred at T/4 and t_pi = lam T / k, so the
    carrier reads cos(phase0 + 2 pi lam s). For odd k the cos(2 pi lam s)
    component integrates to zero by the point symmetry
    theta(1 - s) = pi - theta(s), leaving a sin(2 pi lam s) overlap.
    """
    n_panels = n_panels or panels_for(lam)
    s, w = unit_rule(n_panels)
    alpha = np.asarray(alpha, dtype=float)
    theta = (
        0.5 * math.pi
        - 0.5 * math.pi * np.cos(math.pi * s)
        + alpha[..., None] * np.sin(2.0 * math.pi * lam * s)
    )
    carrier = np.cos(_carrier_phase(k, lam) + 2.0 * math.pi * lam * s)
    return np.sum(w * np.cos(theta) * carrier, axis=-1)


def solve_alpha(k, lam, tol=1e-10, alpha_range=(-2 * math.pi, 2 * math.pi), n_scan=400):
    """Solve the coupling condition for ``alpha``.

    Brackets sign changes of the residual on a uniform scan of
    ``alpha_range`` and refines each to 1e-12; returns the root of smallest
    magnitude (lowest drive amplitude).

    Raises
    ------
    NoBracketFound
        If the residual has no sign change on the scanned range.
    """
    ShapeParams(k, lam)  # validates k, lam
    grid = np.linspace(alpha_range[0], alpha_range[1], n_scan + 1)
    values = coupling_residual(grid, k, lam)
    roots = []
    for i in range(n_scan):
        a, b = values[i], values[i + 1]
        if a == 0.0:
            roots.append(grid[i])
        elif a * b < 0.0:
            f = lambda x: float(coupling_residual(x, k, lam))  # noqa: E731
            roots.append(optimize.brentq(f, grid[i], grid[i + 1], xtol=1e-12, rtol=1e-15))
    if values[-1] == 0.0:
        roots.append(grid[-1])
    roots = [r for r in roots if abs(coupling_residual(r, k, lam)) <= tol]
    if not roots:
        raise NoBracketFound(
            f"coupling residual has no sign change for k={k}, lam={lam} on "
            f"alpha in [{alpha_range[0]:.6g}, {alpha_range[1]:.6g}] "
            f"(g(start)={values[0]:.3e}, g(end)={values[-1]:.3e})"
        )
    return float(min(roots, key=abs))


# --------------------------------------------------------------------------
# error-cancellation condition


def error_integrals(pulse, n_panels=None):
    """Normalized first-order error amplitudes (I_delta, I_omega).

    I_delta = int_0^1 e^{2i gamma} sin(theta) ds
    I_omega = int_0^1 e^{2i gamma} 2 theta'(s) sin^2(theta) ds

    The flip amplitude leaking out of the target state is
    (xi_delta t_pi I_delta - i xi_omega I_omega) / 2.
    """
    n_panels = n_panels or panels_for(getattr(pulse, "lam", 4))
    s, w = unit_rule(n_panels)
    theta = pulse.theta(s)
    phase = np.exp(2j * pulse.gamma(s))
    sin_t = np.sin(theta)
    i_delta = np.sum(w * phase * sin_t)
    i_omega = np.sum(w * phase * 2.0 * pulse.theta_prime(s) * sin_t * sin_t)
    return complex(i_delta), complex(i_omega)


def error_objective(params, weight=1.0):
    i_delta, i_omega = error_integrals(params)
    return abs(i_delta) ** 2 + weight * abs(i_omega) ** 2


def _normalized_peak(params):
    return peak_rabi(params.with_duration(1.0), n_samples=4001)


def optimize_etas(params, weight=1.0, tol=1e-6, n_starts=64, seed=0, strict=False, start_box=3.0):
    """Find (eta1, eta2) that null both first-order error channels.

    Minimizes J = |I_delta|^2 + weight |I_omega|^2 with Nelder-Mead from
    ``n_starts`` random points in [-start_box, start_box]^2. J has many
    zeros, so the starts are spread wide. Among the starts reaching
    J <= tol the design with the smallest peak drive amplitude is returned.
    If none converges the lowest-J point comes back flagged ``best_effort``,
    or ``OptimizerStalled`` is raised when ``strict``.
    """
    if not weight > 0:
        raise ValueError("weight must be positive")
    n_panels = panels_for(params.lam)
    s, w = unit_rule(n_panels)
    theta = eval_theta(params, s)
    sin_t = np.sin(theta)
    w_delta = w * sin_t
    w_omega = w * 2.0 * _theta_prime(params, s) * sin_t * sin_t
    sin2, sin4 = np.sin(2.0 * theta), np.sin(4.0 * theta)

    def objective(x):
        phase = np.exp(2j * (theta + x[0] * sin2 + x[1] * sin4))
        return abs(np.dot(w_delta, phase)) ** 2 + weight * abs(np.dot(w_omega, phase)) ** 2

    rng = np.random.default_rng(seed)
    polished = {}  # one polish per distinct zero of J; many starts share one
    starts = []
    for x0 in rng.uniform(-start_box, start_box, size=(n_starts, 2)):
        res = optimize.minimize(objective, x0, method="Nelder-Mead",
                                options={"xatol": 1e-4, "fatol": 1e-10, "maxiter": 400})
        if res.fun > max(1e3 * tol, 1e-4):
            starts.append((float(res.x[0]), float(res.x[1]), float(res.fun)))
            continue
        key = tuple(np.round(res.x, 2))
        if key not in polished:
            fine = optimize.minimize(objective, res.x, method="Nelder-Mead",
                                     options={"xatol": 1e-11, "fatol": 1e-26, "maxiter": 800})
            polished[key] = (float(fine.x[0]), float(fine.x[1]), float(fine.fun))
        starts.append(polished[key])

    good = [st for st in starts if st[2] <= tol]
    if good:
        best = min(good, key=lambda st: (_normalized_peak(params.with_etas(st[0], st[1])), st[2]))
        return EtaSolution(best[0], best[1], best[2], True, tuple(starts))
    best = min(starts, key=lambda st: st[2])
    if strict:
        lines = ", ".join(f"({a:.4g}, {b:.4g}) J={j:.3e}" for a, b, j in starts)
        raise OptimizerStalled(
            f"no start reached J <= {tol:.1e}; best J = {best[2]:.3e}; starts: {lines}",
            tuple(starts),
        )
    return EtaSolution(best[0], best[1], best[2], False, tuple(starts))


def design_pulse(k, lam, t_pi=1.0, weight=1.0, tol=1e-6, n_starts=64, seed=0, strict=True, start_box=3.0):
    """Solve alpha, then (eta1, eta2); returns the complete ShapeParams."""
    alpha = solve_alpha(k, lam)
    base = ShapeParams(k, lam, alpha=alpha, t_pi=t_pi)
    sol = optimize_etas(base, weight=weight, tol=tol, n_starts=n_starts, seed=seed, strict=strict,
                        start_box=start_box)
    return base.with_etas(sol.eta1, sol.eta2)


def perturbative_infidelity(pulse, err):
    """Second-order flip deficit 1 - P(t_pi) under static control errors.

    |int_0^{t_pi} dt (e^{2i gamma}/2) (xi_delta sin(theta) - 2i xi_omega theta_dot sin^2(theta))|^2
    """
    i_delta, i_omega = error_integrals(pulse)
    amp = 0.5 * (err.xi_delta * pulse.t_pi * i_delta - 1j * err.xi_omega * i_omega)
    return min(abs(amp) ** 2, 1.0)
