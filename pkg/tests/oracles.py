"""Independent reference computations used to derive and check test fixtures.

Nothing here imports the package's numerical kernels: each oracle rebuilds
its quantity from the defining formulas with a different method (dense
Simpson quadrature, bisection, symbolic algebra, brute-force matrix
exponentials).
"""

from __future__ import annotations

import math

import numpy as np
import sympy as sp
from scipy.integrate import simpson
from scipy.linalg import expm

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SZ_NV = np.array([[1, 0], [0, 0]], dtype=complex)


def theta(alpha, lam, s):
    return math.pi / 2 - math.pi / 2 * np.cos(math.pi * s) + alpha * np.sin(2 * math.pi * lam * s)


def theta_prime(alpha, lam, s):
    return math.pi**2 / 2 * np.sin(math.pi * s) + 2 * math.pi * lam * alpha * np.cos(2 * math.pi * lam * s)


# ---------------------------------------------------------------- coupling


def coupling_simpson(alpha, k, lam, n=200_001):
    """int_0^1 cos(theta) cos(k w_m t) ds for a pulse centred at T/4 (T = 1)."""
    s = np.linspace(0.0, 1.0, n)
    t_pi = lam / k
    t = 0.25 - t_pi / 2 + s * t_pi
    return simpson(np.cos(theta(alpha, lam, s)) * np.cos(2 * math.pi * k * t), x=s)


def cos_carrier_simpson(alpha, lam, n=200_001):
    s = np.linspace(0.0, 1.0, n)
    return simpson(np.cos(theta(alpha, lam, s)) * np.cos(2 * math.pi * lam * s), x=s)


def alpha_by_bisection(k, lam, n_scan=4001, n_quad=20_001):
    """Smallest-|alpha| root from a dense scan plus plain bisection."""
    grid = np.linspace(-2 * math.pi, 2 * math.pi, n_scan)
    g = np.array([coupling_simpson(a, k, lam, n_quad) for a in grid])
    roots = []
    for i in np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]:
        lo, hi, glo = grid[i], grid[i + 1], g[i]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            gm = coupling_simpson(mid, k, lam)
            if np.sign(gm) == np.sign(glo):
                lo, glo = mid, gm
            else:
                hi = mid
            if hi - lo < 1e-13:
                break
        roots.append(0.5 * (lo + hi))
    return min(roots, key=abs), roots


# ---------------------------------------------------------------- beta


def sympy_beta(eta1, eta2):
    """Lambdified beta(theta) and d beta / d theta from symbolic algebra."""
    th = sp.symbols("theta", real=True)
    m = 1 + 2 * eta1 * sp.cos(2 * th) + 4 * eta2 * sp.cos(4 * th)
    beta = sp.acos(-2 * m * sp.sin(th) / sp.sqrt(1 + 4 * m**2 * sp.sin(th) ** 2))
    return sp.lambdify(th, beta, "numpy"), sp.lambdify(th, sp.diff(beta, th), "numpy")


def error_integrals_simpson(alpha, lam, eta1, eta2, n=400_001):
    s = np.linspace(0.0, 1.0, n)
    th = theta(alpha, lam, s)
    gam = th + eta1 * np.sin(2 * th) + eta2 * np.sin(4 * th)
    ph = np.exp(2j * gam)
    i_d = simpson(ph * np.sin(th), x=s)
    i_o = simpson(ph * 2 * theta_prime(alpha, lam, s) * np.sin(th) ** 2, x=s)
    return i_d, i_o


# ---------------------------------------------------------------- propagation


def qubit_h(omega, delta, phi):
    return 0.5 * omega * (math.cos(phi) * SX - math.sin(phi) * SY) + 0.5 * delta * SZ


def expm_pulse(controls, t_pi, phi=0.0, xi_omega=0.0, xi_delta=0.0, n=4000, static=None):
    """Midpoint-rule product of matrix exponentials over one pulse.

    ``controls(t)`` returns (Omega, delta) in rad/s. ``static`` is an extra
    time-independent Hamiltonian on the full space (qubit tensor nucleus).
    """
    dt = t_pi / n
    dim = 2 if static is None else static.shape[0]
    u = np.eye(dim, dtype=complex)
    for j in range(n):
        om, de = controls(np.array([(j + 0.5) * dt]))
        h = qubit_h(float(om[0]) * (1 + xi_omega), float(de[0]) + xi_delta, phi)
        if static is not None:
            h = np.kron(h, np.eye(dim // 2)) + static
        u = expm(-1j * h * dt) @ u
    return u


def nuclear_static(gamma_n, b_z, hyperfine):
    ix = 0.5 * SX
    iy = 0.5 * SY
    iz = 0.5 * SZ
    h = -gamma_n * b_z * np.kron(np.eye(2), iz)
    for a, op in zip(hyperfine, (ix, iy, iz)):
        h = h + a * np.kron(SZ_NV, op)
    return h


XY8 = (0.0, -math.pi / 2, 0.0, -math.pi / 2, -math.pi / 2, 0.0, -math.pi / 2, 0.0)


def ideal_xy8_sigma_x(period, n_xy8, h_static, xi_delta=0.0):
    """Instantaneous XY8 on NV x nucleus, mixed nuclear state, NV from +x.

    Free evolution of length T/4, T/2, T/4 between pulses; each pulse is
    exp(-i pi sigma_phi / 2) = -i sigma_phi.
    """
    h_free = h_static + 0.5 * xi_delta * np.kron(SZ, np.eye(2))
    u_q = expm(-1j * h_free * period / 4)
    u_h = u_q @ u_q
    block = np.eye(4, dtype=complex)
    for i, phi in enumerate(XY8):
        p = np.kron(-1j * (math.cos(phi) * SX - math.sin(phi) * SY), np.eye(2))
        pre = u_q if i % 2 == 0 else u_h
        block = p @ pre @ block
        if i % 2 == 1:
            block = u_q @ block
    u = np.linalg.matrix_power(block, n_xy8)
    plus = np.array([1, 1]) / math.sqrt(2)
    sx = np.kron(SX, np.eye(2))
    vals = []
    for nuc in (np.array([1, 0]), np.array([0, 1])):
        psi = u @ np.kron(plus, nuc)
        vals.append(np.real(psi.conj() @ sx @ psi))
    return float(np.mean(vals))


def classical_ideal_sigma_x(period, n_xy8, gamma_amp, omega_s, n_sub=64):
    """Instantaneous XY8 under H = Gamma cos(omega_s t) S_z, NV from +x.

    H is diagonal, so between pulses the |1> amplitude only picks up the
    phase -int Gamma cos(omega_s t) dt; evaluated here by Simpson.
    """
    psi = np.array([1, 1], dtype=complex) / math.sqrt(2)
    t = 0.0
    edges = []
    for j in range(4 * n_xy8):
        edges += [(j + 0.25) * period, (j + 0.75) * period]
    edges.append(4 * n_xy8 * period)
    phases = XY8 * n_xy8
    for i, t_next in enumerate(edges):
        ts = np.linspace(t, t_next, 2 * n_sub + 1)
        acc = simpson(gamma_amp * np.cos(omega_s * ts), x=ts)
        psi = np.array([psi[0] * np.exp(-1j * acc), psi[1]])
        if i < len(phases):
            phi = phases[i]
            psi = -1j * (math.cos(phi) * SX - math.sin(phi) * SY) @ psi
        t = t_next
    return float(np.real(psi.conj() @ SX @ psi))


def brute_xy8_sigma_x(period, n_xy8, controls, t_pi, static=None, signal=None,
                      xi_omega=0.0, xi_delta=0.0, n_pulse=2000, n_sub=256):
    """Finite-pulse XY8 by brute-force matrix exponentials.

    Pulses: midpoint product of ``n_pulse`` exponentials of the full
    Hamiltonian. Free segments: exact exponential of the static part, or for
    a classical ``signal = (gamma_amp, omega_s)`` the diagonal phase
    integrated by Simpson. Detuning error acts throughout, the Rabi error only
    inside pulses. NV starts along +x; a nucleus (``static`` 4x4) is averaged
    over its two I_z eigenstates.
    """
    dim = 2 if static is None else 4
    eye_n = np.eye(dim // 2)
    h_det = 0.5 * xi_delta * np.kron(SZ, eye_n)
    h_stat = (np.zeros((dim, dim)) if static is None else static) + h_det

    def h_at(t, om, de, phi):
        h = np.kron(qubit_h(om * (1 + xi_omega), de, phi), eye_n) + h_stat
        if signal is not None:
            h = h + signal[0] * math.cos(signal[1] * t) * np.kron(SZ_NV, eye_n)
        return h

    def free(t0, t1):
        if signal is None:
            return expm(-1j * h_stat * (t1 - t0))
        ts = np.linspace(t0, t1, 2 * n_sub + 1)
        acc = simpson(signal[0] * np.cos(signal[1] * ts), x=ts)
        return np.diag([np.exp(-1j * acc), 1.0]) @ expm(-1j * h_stat * (t1 - t0))

    def pulse(t0, phi):
        dt = t_pi / n_pulse
        u = np.eye(dim, dtype=complex)
        tm = t0 + (np.arange(n_pulse) + 0.5) * dt
        om, de = controls(tm - t0)
        for j in range(n_pulse):
            u = expm(-1j * h_at(tm[j], om[j], de[j], phi) * dt) @ u
        return u

    cache = {}
    u = np.eye(dim, dtype=complex)
    t = 0.0
    phases = XY8 * n_xy8
    for i, phi in enumerate(phases):
        centre = (i // 2 + (0.25 if i % 2 == 0 else 0.75)) * period
        start = centre - t_pi / 2
        u = free(t, start) @ u
        if signal is None:
            if (phi, t_pi) not in cache:
                cache[(phi, t_pi)] = pulse(0.0, phi)
            u = cache[(phi, t_pi)] @ u
        else:
            u = pulse(start, phi) @ u
        t = start + t_pi
    u = free(t, 4 * n_xy8 * period) @ u
    plus = np.array([1, 1]) / math.sqrt(2)
    sx = np.kron(SX, eye_n)
    inits = [plus] if dim == 2 else [np.kron(plus, [1, 0]), np.kron(plus, [0, 1])]
    vals = [np.real((u @ p).conj() @ sx @ (u @ p)) for p in inits]
    return float(np.mean(vals))
