"""Fixed-step RK4 for i dpsi/dt = H psi with a sparse Hermitian H."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from ..dynamics import DecayTrace
from ..errors import NumericalFailure

NORM_DRIFT_LIMIT = 1e-6


@dataclass(frozen=True, eq=False)
class LatticeState:
    """Bath and level amplitudes at one instant."""

    bath_amplitudes: np.ndarray
    level_amplitudes: np.ndarray
    geometry: tuple[int, ...]
    time: float

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.bath_amplitudes) ** 2) + np.sum(np.abs(self.level_amplitudes) ** 2))


@dataclass(frozen=True, eq=False)
class ExactRun:
    """Exact level amplitudes on the requested grid plus the final lattice state."""

    trace: DecayTrace
    final_state: LatticeState
    norm_drift: float

    @property
    def occupations(self) -> np.ndarray:
        return self.trace.occupations


def rk4_evolve(
    H: sp.spmatrix,
    psi0: np.ndarray,
    times: np.ndarray,
    dt: float,
    on_sample: Callable[[float, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate from ``times[0]`` through every grid time with steps <= dt.

    Returns ``(samples, final_psi)`` where ``samples[j]`` is the state at
    ``times[j]``. ``on_sample`` is called at every grid time (boundary checks).
    """
    H = sp.csr_matrix(H, dtype=complex)
    mH = -1j * H
    psi = np.array(psi0, dtype=complex)
    times = np.asarray(times, dtype=float)
    samples = np.empty((times.size, psi.size), dtype=complex)
    samples[0] = psi
    if on_sample is not None:
        on_sample(float(times[0]), psi)
    for j in range(1, times.size):
        span = times[j] - times[j - 1]
        nsteps = max(1, int(math.ceil(span / dt - 1e-9)))
        h = span / nsteps
        for _ in range(nsteps):
            k1 = mH @ psi
            k2 = mH @ (psi + 0.5 * h * k1)
            k3 = mH @ (psi + 0.5 * h * k2)
            k4 = mH @ (psi + h * k3)
            psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        samples[j] = psi
        if on_sample is not None:
            on_sample(float(times[j]), psi)
    return samples, psi


def check_norm(samples: np.ndarray, limit: float = NORM_DRIFT_LIMIT) -> float:
    norms = np.sum(np.abs(samples) ** 2, axis=1)
    drift = float(np.max(np.abs(norms - norms[0])))
    if drift > limit:
        raise NumericalFailure(f"norm drift {drift:.3g} exceeds {limit:.1g}; reduce dt")
    return drift


def check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) < 0):
        raise ValueError("times must be a sorted 1-D grid starting at 0")
    return t
