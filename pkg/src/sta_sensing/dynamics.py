"""Time-domain propagation of the NV qubit, alone or with a target.

Qubit basis order is (|1>, |0>) with sigma_z = |1><1| - |0><0| and
S_z = diag(1, 0). With a nuclear spin the space is NV (x) nucleus.

Two propagation paths share one stepper (4th-order commutator-free Magnus
with two exponentials per step):

* static targets (none, or a nuclear spin): H between and within pulses is
  the same every period, so one unitary per pulse phase and one per free
  gap is built and the XY8 block is raised to the n-th power;
* a classical signal: H_T is time dependent but diagonal, so free gaps
  are integrated exactly and every pulse is stepped on the state vector by
  a compiled kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .pulse_shaper import ErrorModel
from .targets import ClassicalSignal, NuclearSpin, nuclear_operators, target_dim

__all__ = [
    "IntegratorConfig",
    "EvolutionResult",
    "StepTooLarge",
    "NuclearSpin",
    "ClassicalSignal",
    "hamiltonian_at",
    "propagate",
    "pulse_unitary",
    "exact_flip_infidelity",
    "pulse_trajectory",
    "plus_x_states",
    "sigma_x_expectation",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
S_Z = np.array([[1, 0], [0, 0]], dtype=complex)
EYE2 = np.eye(2, dtype=complex)

# Commutator-free Magnus, order 4: Gauss nodes and exponent weights.
_C1 = 0.5 - math.sqrt(3.0) / 6.0
_C2 = 0.5 + math.sqrt(3.0) / 6.0
_A1 = (3.0 - 2.0 * math.sqrt(3.0)) / 12.0
_A2 = (3.0 + 2.0 * math.sqrt(3.0)) / 12.0


class StepTooLarge(RuntimeError):
    """Norm drift over a propagation exceeded the configured budget."""


@dataclass(frozen=True)
class IntegratorConfig:
    steps_per_pulse: int = 2000
    norm_tolerance: float = 1e-9

    def __post_init__(self):
        if self.steps_per_pulse < 1:
            raise ValueError("steps_per_pulse must be >= 1")


@dataclass(frozen=True)
class EvolutionResult:
    states: np.ndarray
    sigma_x: float
    sigma_x_each: np.ndarray
    norm_drift: float
    n_steps: int = 0
    diagnostics: dict = field(default_factory=dict)


def sigma_phi(phi):
    """|1><0| e^{i phi} + h.c.; phi = 0 gives sigma_x, phi = -pi/2 gives sigma_y."""
    return math.cos(phi) * SIGMA_X - math.sin(phi) * SIGMA_Y


def _lift(op, dim):
    return op if dim == 2 else np.kron(op, EYE2)


def _target_static(target, dim):
    if target is None:
        return np.zeros((dim, dim), dtype=complex)
    ix, iy, iz = nuclear_operators()
    ax, ay, az = target.hyperfine
    return -target.larmor * np.kron(EYE2, iz) + np.kron(S_Z, ax * ix + ay * iy + az * iz)


def hamiltonian_at(t, target=None, err=ErrorModel(), omega=0.0, delta=0.0, phi=0.0):
    """Rotating-frame Hamiltonian (rad/s).

    H = H_T(t) + Omega (1 + xi_omega)/2 sigma_phi + (delta + xi_delta)/2 sigma_z.
    Pass omega = delta = 0 for a free segment.
    """
    dim = target_dim(target)
    control = 0.5 * omega * (1.0 + err.xi_omega) * sigma_phi(phi) + 0.5 * (delta + err.xi_delta) * SIGMA_Z
    h = _lift(control, dim)
    if isinstance(target, ClassicalSignal):
        h = h + target.gamma_amp * math.cos(target.omega_s * t) * S_Z
    elif target is not None:
        h = h + _target_static(target, dim)
    return h


def plus_x_states(target=None):
    """NV prepared along +x; for a nuclear spin, one state per I_z eigenstate."""
    plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    if target_dim(target) == 2:
        return plus[None, :]
    return np.stack([np.kron(plus, [1.0, 0.0]), np.kron(plus, [0.0, 1.0])])


def sigma_x_expectation(states):
    """<sigma_x> of the NV for each row of ``states``."""
    states = np.atleast_2d(states)
    op = _lift(SIGMA_X, states.shape[1])
    return np.real(np.einsum("ni,ij,nj->n", states.conj(), op, states))


# --------------------------------------------------------------------------
# static-target path


def _expm_hermitian(h, dt):
    """exp(-i h dt) for a stack of Hermitian matrices."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def _ordered_product(mats):
    """mats[-1] @ ... @ mats[0] by pairwise reduction."""
    eye = np.eye(mats.shape[-1], dtype=complex)
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, eye[None]])
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def _node_controls(pulse, err, steps):
    h = 1.0 / steps
    s0 = np.arange(steps) * h
    om_a, de_a = pulse.controls((s0 + _C1 * h) * pulse.t_pi)
    om_b, de_b = pulse.controls((s0 + _C2 * h) * pulse.t_pi)
    scale = 1.0 + err.xi_omega
    return (
        np.ascontiguousarray(om_a * scale),
        np.ascontiguousarray(de_a + err.xi_delta),
        np.ascontiguousarray(om_b * scale),
        np.ascontiguousarray(de_b + err.xi_delta),
        pulse.t_pi * h,
    )


def pulse_unitary(pulse, phi, target=None, err=ErrorModel(), steps=2000):
    """Propagator of one pulse for a time-independent target.

    ``pulse`` None gives the instantaneous rotation exp(-i pi sigma_phi / 2).
    """
    dim = target_dim(target)
    if target is not None and target.time_dependent:
        raise TypeError("pulse_unitary needs a time-independent target")
    if pulse is None:
        return _lift(-1j * sigma_phi(phi), dim)
    om_a, de_a, om_b, de_b, dt = _node_controls(pulse, err, steps)
    # each exponent's weights sum to 1/2, so the static part enters halved
    base = 0.5 * _target_static(target, dim)
    x_op = _lift(0.5 * sigma_phi(phi), dim)
    z_op = _lift(0.5 * SIGMA_Z, dim)
    # delta arrays already carry xi_delta
    h_first = (
        base
        + (_A2 * om_a + _A1 * om_b)[:, None, None] * x_op
        + (_A2 * de_a + _A1 * de_b)[:, None, None] * z_op
    )
    h_second = (
        base
        + (_A1 * om_a + _A2 * om_b)[:, None, None] * x_op
        + (_A1 * de_a + _A2 * de_b)[:, None, None] * z_op
    )
    mats = np.empty((2 * steps, dim, dim), dtype=complex)
    mats[0::2] = _expm_hermitian(h_first, dt)
    mats[1::2] = _expm_hermitian(h_second, dt)
    return _ordered_product(mats)


def _free_static(target, err, dim):
    h = _target_static(target, dim) + _lift(0.5 * err.xi_delta * SIGMA_Z, dim)
    w, v = np.linalg.eigh(h)
    return lambda dt: (v * np.exp(-1j * w * dt)) @ v.conj().T


def _static_sequence_unitary(schedule, target, err, steps):
    dim = target_dim(target)
    T, tp = schedule.period_T, schedule.t_pi
    free = _free_static(target, err, dim)
    f_edge = free(0.25 * T - 0.5 * tp)
    f_mid = free(0.5 * T - tp)
    px = pulse_unitary(schedule.pulse, 0.0, target, err, steps)
    py = pulse_unitary(schedule.pulse, -0.5 * math.pi, target, err, steps)
    u_xy = f_edge @ py @ f_mid @ px @ f_edge
    u_yx = f_edge @ px @ f_mid @ py @ f_edge
    block = u_yx @ u_yx @ u_xy @ u_xy
    return np.linalg.matrix_power(block, schedule.n_xy8)


# --------------------------------------------------------------------------
# time-dependent qubit path


@numba.njit(cache=True, inline="always")
def _apply_su2(p0, p1, x, z, cphi, sphi, dt):
    # exp(-i dt (x sigma_phi + z sigma_z)) applied to (p0, p1)
    hx = x * cphi
    hy = -x * sphi
    n = math.sqrt(hx * hx + hy * hy + z * z)
    c = math.cos(n * dt)
    s = math.sin(n * dt) / n if n > 0.0 else dt
    q0 = complex(c, -s * z) * p0 + complex(-s * hy, -s * hx) * p1
    q1 = complex(s * hy, -s * hx) * p0 + complex(c, s * z) * p1
    return q0, q1


@numba.njit(cache=True)
def _step_pulse(p0, p1, om_a, de_a, om_b, de_b, dt, t0, cphi, sphi, sig_amp, omega_s):
    """CFM4 steps of one pulse on a qubit state; returns the new amplitudes.

    H = (Omega/2) sigma_phi + (delta/2 + sig_amp cos(omega_s t)/2) sigma_z.
    """
    a1 = (3.0 - 2.0 * math.sqrt(3.0)) / 12.0
    a2 = (3.0 + 2.0 * math.sqrt(3.0)) / 12.0
    c1 = 0.5 - math.sqrt(3.0) / 6.0
    c2 = 0.5 + math.sqrt(3.0) / 6.0
    for j in range(om_a.shape[0]):
        za = de_a[j]
        zb = de_b[j]
        if sig_amp != 0.0:
            za += sig_amp * math.cos(omega_s * (t0 + (j + c1) * dt))
            zb += sig_amp * math.cos(omega_s * (t0 + (j + c2) * dt))
        p0, p1 = _apply_su2(
            p0, p1, 0.5 * (a2 * om_a[j] + a1 * om_b[j]), 0.5 * (a2 * za + a1 * zb), cphi, sphi, dt
        )
        p0, p1 = _apply_su2(
            p0, p1, 0.5 * (a1 * om_a[j] + a2 * om_b[j]), 0.5 * (a1 * za + a2 * zb), cphi, sphi, dt
        )
    return p0, p1


@numba.njit(cache=True)
def _run_qubit_sequence(
    p0, p1, starts, cphis, sphis, t_pi, instantaneous,
    om_a, de_a, om_b, de_b, dt, xi_delta, sig_amp, omega_s, t_end,
):
    t = 0.0
    for i in range(starts.shape[0]):
        t1 = starts[i]
        chi = 0.5 * xi_delta * (t1 - t)
        if sig_amp != 0.0:
            chi += 0.5 * sig_amp / omega_s * (math.sin(omega_s * t1) - math.sin(omega_s * t))
        p0 = p0 * complex(math.cos(chi), -math.sin(chi))
        p1 = p1 * complex(math.cos(chi), math.sin(chi))
        if instantaneous:
            # -i sigma_phi with sigma_phi = [[0, e^{i phi}], [e^{-i phi}, 0]]
            e_p = complex(cphis[i], -sphis[i])
            q0 = -1j * e_p * p1
            q1 = -1j * e_p.conjugate() * p0
            p0 = q0
            p1 = q1
            t = t1
        else:
            p0, p1 = _step_pulse(p0, p1, om_a, de_a, om_b, de_b, dt, t1, cphis[i], sphis[i], sig_amp, omega_s)
            t = t1 + t_pi
    chi = 0.5 * xi_delta * (t_end - t)
    if sig_amp != 0.0:
        chi += 0.5 * sig_amp / omega_s * (math.sin(omega_s * t_end) - math.sin(omega_s * t))
    p0 = p0 * complex(math.cos(chi), -math.sin(chi))
    p1 = p1 * complex(math.cos(chi), math.sin(chi))
    return p0, p1


_EMPTY = np.zeros(1)


def _qubit_sequence(states, schedule, target, err, steps):
    instantaneous = schedule.pulse is None
    if instantaneous:
        om_a = de_a = om_b = de_b = _EMPTY
        dt = 0.0
    else:
        om_a, de_a, om_b, de_b, dt = _node_controls(schedule.pulse, err, steps)
    starts = np.ascontiguousarray(schedule.pulse_centers - 0.5 * schedule.t_pi)
    phases = schedule.phases
    sig_amp = target.gamma_amp if target is not None else 0.0
    omega_s = target.omega_s if target is not None else 1.0
    out = np.empty_like(states)
    for n, psi in enumerate(states):
        out[n] = _run_qubit_sequence(
            complex(psi[0]), complex(psi[1]), starts, np.cos(phases), np.sin(phases),
            schedule.t_pi, instantaneous, om_a, de_a, om_b, de_b, dt,
            err.xi_delta, sig_amp, omega_s, schedule.total_time,
        )
    return out


# --------------------------------------------------------------------------


def propagate(states, schedule, target=None, err=ErrorModel(), config=IntegratorConfig()):
    """Evolve initial states through a schedule and read out <sigma_x>.

    ``states`` has shape (d,) or (m, d). The static control error applies
    during pulses (both channels) and free evolution (detuning only).
    """
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    dim = target_dim(target)
    if states.shape[1] != dim:
        raise ValueError(f"state dimension {states.shape[1]} does not match target ({dim})")
    steps = int(config.steps_per_pulse)
    if isinstance(target, ClassicalSignal):
        final = _qubit_sequence(states, schedule, target, err, steps)
    else:
        final = states @ _static_sequence_unitary(schedule, target, err, steps).T
    drift = float(np.max(np.abs(np.linalg.norm(final, axis=1) - np.linalg.norm(states, axis=1))))
    if drift > config.norm_tolerance:
        raise StepTooLarge(
            f"norm drift {drift:.2e} exceeds {config.norm_tolerance:.1e}; "
            f"increase steps_per_pulse (now {steps})"
        )
    each = sigma_x_expectation(final)
    n_steps = 0 if schedule.pulse is None else steps * schedule.n_pulses
    return EvolutionResult(final, float(np.mean(each)), each, drift, n_steps)


def _evolve_bare(pulse, err, steps, psi=(1.0, 0.0), phi=0.0):
    om_a, de_a, om_b, de_b, dt = _node_controls(pulse, err, steps)
    return _step_pulse(
        complex(psi[0]), complex(psi[1]), om_a, de_a, om_b, de_b, dt, 0.0,
        math.cos(phi), math.sin(phi), 0.0, 1.0,
    )


def exact_flip_infidelity(pulse, err=ErrorModel(), steps=2000):
    """1 - |<0|U|1>|^2 for one pulse on the bare qubit under ``err``."""
    _, p1 = _evolve_bare(pulse, err, steps)
    return float(min(max(1.0 - abs(p1) ** 2, 0.0), 1.0))


def pulse_trajectory(pulse, n_samples=2001, steps=2000, err=ErrorModel()):
    """Qubit state from |1> at ``n_samples`` uniform times over [0, t_pi].

    Returns (t, states) with states of shape (n_samples, 2).
    """
    n_int = n_samples - 1
    sub = max(1, math.ceil(steps / n_int))
    h = 1.0 / (n_int * sub)
    s_all = np.arange(n_int * sub) * h
    om_a, de_a = pulse.controls((s_all + _C1 * h) * pulse.t_pi)
    om_b, de_b = pulse.controls((s_all + _C2 * h) * pulse.t_pi)
    om_a = om_a * (1.0 + err.xi_omega)
    om_b = om_b * (1.0 + err.xi_omega)
    de_a = de_a + err.xi_delta
    de_b = de_b + err.xi_delta
    dt = pulse.t_pi * h
    out = np.empty((n_samples, 2), dtype=complex)
    p0, p1 = 1.0 + 0j, 0j
    out[0] = p0, p1
    for i in range(n_int):
        sl = slice(i * sub, (i + 1) * sub)
        p0, p1 = _step_pulse(
            p0, p1,
            np.ascontiguousarray(om_a[sl]), np.ascontiguousarray(de_a[sl]),
            np.ascontiguousarray(om_b[sl]), np.ascontiguousarray(de_b[sl]),
            dt, 0.0, 1.0, 0.0, 0.0, 1.0,
        )
        out[i + 1] = p0, p1
    return np.linspace(0.0, pulse.t_pi, n_samples), out
