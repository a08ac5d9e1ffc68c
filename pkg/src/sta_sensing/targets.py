"""Signals the NV sensor can couple to."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NuclearSpin:
    """A single spin-1/2 nucleus: H_T = -gamma_n B_z I_z + S_z A.I

    ``gamma_n`` in rad/s/T, ``b_z`` in tesla, ``hyperfine`` in rad/s.
    """

    gamma_n: float
    b_z: float
    hyperfine: tuple

    def __post_init__(self):
        hf = tuple(float(a) for a in self.hyperfine)
        if len(hf) != 3 or not all(math.isfinite(a) for a in hf):
            raise ValueError("hyperfine must be a finite 3-vector")
        if not self.b_z > 0:
            raise ValueError("b_z must be positive")
        object.__setattr__(self, "hyperfine", hf)

    dim = 4
    time_dependent = False

    @property
    def larmor(self):
        return self.gamma_n * self.b_z

    @property
    def resonance(self):
        """Angular probe frequency of the Hartmann-Hahn-type resonance."""
        return self.larmor - 0.5 * self.hyperfine[2]


@dataclass(frozen=True)
class ClassicalSignal:
    """H_T = gamma_amp S_z cos(omega_s t), both in rad/s."""

    gamma_amp: float
    omega_s: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma_amp) and self.omega_s > 0):
            raise ValueError("need finite amplitude and positive signal frequency")

    dim = 2
    time_dependent = True

    @property
    def resonance(self):
        return self.omega_s


def target_dim(target):
    return 2 if target is None else target.dim


def nuclear_operators():
    """Spin-1/2 operators (I_x, I_y, I_z) in the (|up>, |down>) basis."""
    ix = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
    iy = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex)
    iz = 0.5 * np.array([[1, 0], [0, -1]], dtype=complex)
    return ix, iy, iz
