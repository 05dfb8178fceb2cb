"""Rectified binary lattice (anomalous Floquet bath) with side-coupled levels.

Sites are interleaved as A_0, B_0, A_1, B_1, ...; site A_j has index 2j and
B_j has index 2j + 1. Step 1 couples the dimers (A_j, B_j), step 2 the
dimers (B_j, A_{j+1}), each for a full pi/2 pulse. Step 3 decouples the
lattice and couples every level to its A site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import numerics
from ..dynamics import DecayTrace
from ..errors import DimensionMismatch, Wraparound
from ..model import (
    EffectiveHamiltonian,
    FloquetSawtooth,
    LevelChain,
    build_unidirectional,
)
from .integrate import ExactRun, LatticeState

PULSE_TOL = 1e-12
WRAP_TOL = 1e-8


@dataclass(frozen=True)
class FloquetCycle:
    """One modulation cycle of period T = 2 t1 + t2 with kappa_bath * t1 = pi/2."""

    t1: float
    t2: float
    kappa_bath: float
    rho: tuple[float, ...]
    sites: tuple[int, ...]  # A-sublattice indices of the attached levels

    def __post_init__(self):
        object.__setattr__(self, "rho", tuple(float(r) for r in self.rho))
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        if not (self.t1 > 0 and self.t2 >= 0):
            raise ValueError("need t1 > 0 and t2 >= 0")
        if abs(self.kappa_bath * self.t1 - math.pi / 2) > PULSE_TOL:
            raise ValueError(f"kappa_bath * t1 = {self.kappa_bath * self.t1!r}, must equal pi/2")
        if len(self.rho) != len(self.sites):
            raise DimensionMismatch("one coupling rho per attached site")
        if len(set(self.sites)) != len(self.sites):
            raise ValueError("levels must attach to distinct A sites")

    @classmethod
    def standard(cls, T: float, t2: float, rho: Sequence[float], sites: Sequence[int]) -> "FloquetCycle":
        """Cycle of period T; t1 = (T - t2)/2 and kappa_bath = pi / (2 t1)."""
        t1 = 0.5 * (T - t2)
        return cls(t1, t2, math.pi / (2.0 * t1), tuple(rho), tuple(sites))

    @property
    def T(self) -> float:
        return 2.0 * self.t1 + self.t2

    @property
    def n_levels(self) -> int:
        return len(self.rho)


def _dimer(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _apply_dimers(psi: np.ndarray, pairs: np.ndarray, R: np.ndarray) -> None:
    a, b = psi[pairs[:, 0]], psi[pairs[:, 1]]
    psi[pairs[:, 0]] = R[0, 0] * a + R[0, 1] * b
    psi[pairs[:, 1]] = R[1, 0] * a + R[1, 1] * b


def _pairs(n_a: int, periodic: bool) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(n_a)
    step1 = np.column_stack([2 * j, 2 * j + 1])
    if periodic:
        step2 = np.column_stack([2 * j + 1, (2 * j + 2) % (2 * n_a)])
    else:
        j = j[:-1]
        step2 = np.column_stack([2 * j + 1, 2 * j + 2])
    return step1, step2


def bath_cycle_operator(n_a: int, kappa_t1: float = math.pi / 2, periodic: bool = True) -> np.ndarray:
    """Matrix of steps 1 and 2 on a lattice of n_a A sites and n_a B sites."""
    if n_a < 2:
        raise ValueError("need at least two A sites")
    R = _dimer(kappa_t1)
    s1, s2 = _pairs(n_a, periodic)
    U = np.eye(2 * n_a, dtype=complex)
    for col in range(2 * n_a):
        v = U[:, col]
        _apply_dimers(v, s1, R)
        _apply_dimers(v, s2, R)
    return U


def shift_operator(n_a: int) -> np.ndarray:
    """A_j -> -A_{j+1}, B_j -> -B_{j-1} on a ring."""
    S = np.zeros((2 * n_a, 2 * n_a), dtype=complex)
    for j in range(n_a):
        S[2 * ((j + 1) % n_a), 2 * j] = -1.0
        S[2 * ((j - 1) % n_a) + 1, 2 * j + 1] = -1.0
    return S


def floquet_cycle_evolve(
    cycle: FloquetCycle,
    lattice_size: int,
    omega_levels,
    c0,
    n_cycles: int,
    bath0=None,
    origin: int = 2,
    periodic: bool = False,
) -> ExactRun:
    """Stroboscopic level amplitudes at t = 0, T, ..., n_cycles T.

    ``lattice_size`` counts all sites (A and B) and must be even. Level
    sites are A indices offset by ``origin``. Step 3 is integrated exactly:
    each level and its A site form a closed 2 x 2 block. Raises
    :class:`Wraparound` when more than 1e-8 of the weight sits on the two
    outermost cells of an open lattice.
    """
    if lattice_size % 2 or lattice_size < 4:
        raise ValueError("lattice_size must be even and >= 4")
    if n_cycles < 0:
        raise ValueError("n_cycles must be >= 0")
    n_a = lattice_size // 2
    w = np.asarray(omega_levels, dtype=float)
    c0 = np.asarray(c0, dtype=complex)
    if w.shape != (cycle.n_levels,) or c0.shape != (cycle.n_levels,):
        raise DimensionMismatch("omega_levels and c0 need one entry per attached level")
    a_idx = 2 * (origin + np.array(cycle.sites, dtype=int))
    if np.any(a_idx < 0) or np.any(a_idx >= lattice_size):
        raise ValueError("level sites fall outside the lattice")

    R = _dimer(cycle.kappa_bath * cycle.t1)
    s1, s2 = _pairs(n_a, periodic)
    idle_phase = np.exp(-1j * w * 2.0 * cycle.t1)
    blocks = [
        numerics.expm(-1j * cycle.t2 * np.array([[wa, r], [r, 0.0]], dtype=complex))
        for wa, r in zip(w, cycle.rho)
    ]
    edge = np.r_[0, 1, lattice_size - 2, lattice_size - 1]

    bath = np.zeros(lattice_size, dtype=complex) if bath0 is None else np.array(bath0, dtype=complex)
    if bath.shape != (lattice_size,):
        raise DimensionMismatch("bath0 must have lattice_size entries")
    lv = c0.copy()
    amps = np.empty((n_cycles + 1, cycle.n_levels), dtype=complex)
    amps[0] = lv
    for n in range(1, n_cycles + 1):
        _apply_dimers(bath, s1, R)
        _apply_dimers(bath, s2, R)
        lv *= idle_phase
        for a, (B, s) in enumerate(zip(blocks, a_idx)):
            x, y = lv[a], bath[s]
            lv[a] = B[0, 0] * x + B[0, 1] * y
            bath[s] = B[1, 0] * x + B[1, 1] * y
        amps[n] = lv
        if not periodic:
            wedge = float(np.sum(np.abs(bath[edge]) ** 2))
            if wedge > WRAP_TOL:
                raise Wraparound(f"weight {wedge:.3g} at the lattice ends after cycle {n}; enlarge lattice_size")
    times = cycle.T * np.arange(n_cycles + 1)
    trace = DecayTrace(times, amps, np.sum(np.abs(amps) ** 2, axis=1))
    state = LatticeState(bath, lv, (lattice_size,), float(times[-1]))
    drift = abs(state.norm - float(np.sum(np.abs(c0) ** 2) + (0.0 if bath0 is None else np.sum(np.abs(bath0) ** 2))))
    return ExactRun(trace, state, drift)


def _ring_hamiltonians(cycle: FloquetCycle, omega_levels, n_a: int):
    """H_1 and H_2 of the BCH expansion on a ring of n_a A sites (bath in the A sublattice)."""
    T = cycle.T
    N = cycle.n_levels
    j = np.arange(n_a)
    k = -math.pi + 2.0 * math.pi * j / n_a
    wk = FloquetSawtooth(T).omega(k)
    F = np.exp(1j * np.outer(j, k)) / math.sqrt(n_a)  # columns: plane waves e^{ikj}
    H_bath = F @ np.diag(wk) @ F.conj().T
    dim = n_a + N
    H_bs = np.zeros((dim, dim), dtype=complex)
    H_bs[n_a:, n_a:] = np.diag(np.asarray(omega_levels, dtype=float))
    H_0 = np.zeros((dim, dim), dtype=complex)
    for a, (r, s) in enumerate(zip(cycle.rho, cycle.sites)):
        H_0[n_a + a, s % n_a] = r
        H_0[s % n_a, n_a + a] = r
    H1 = np.zeros((dim, dim), dtype=complex)
    H1[:n_a, :n_a] = H_bath
    H1 += (2.0 * cycle.t1 / T) * H_bs
    H2 = (cycle.t2 / T) * (H_bs + H_0)
    return H1, H2


def bch_commutator_norm(cycle: FloquetCycle, omega_levels, n_a: int = 64) -> float:
    """Spectral norm of (i T / 2) [H_1, H_2] evaluated on a ring of n_a A sites."""
    H1, H2 = _ring_hamiltonians(cycle, omega_levels, n_a)
    C = 0.5j * cycle.T * (H1 @ H2 - H2 @ H1)
    return float(np.linalg.norm(C, 2))


def commutator_estimate(cycle: FloquetCycle, omega_levels) -> float:
    """Weak-coupling size of the first BCH correction to the level-bath coupling.

    (T/2) |omega_a - omega(k)| |g_a| with the detuning taken at its largest
    over the quasi-energy zone and g_a = (t2 / T) rho_a.
    """
    T = cycle.T
    lo, hi = FloquetSawtooth(T).band()
    best = 0.0
    for wa, r in zip(omega_levels, cycle.rho):
        wr = float(wa) % (hi - lo)
        detune = max(wr - lo, hi - wr)
        best = max(best, 0.5 * T * detune * (cycle.t2 / T) * abs(r))
    return best


def floquet_effective(cycle: FloquetCycle, omega_levels) -> EffectiveHamiltonian:
    """Effective non-Hermitian model: kappa_a = (t2 / T) rho_a, v = 1 / T."""
    T = cycle.T
    w = np.asarray(omega_levels, dtype=float)
    if w.shape != (cycle.n_levels,):
        raise DimensionMismatch("omega_levels needs one entry per attached level")
    kappas = [(cycle.t2 / T) * r for r in cycle.rho]
    chain = LevelChain.from_arrays(w, kappas, cycle.sites)
    H = build_unidirectional(chain, FloquetSawtooth(T))
    H.metadata["commutator_estimate"] = commutator_estimate(cycle, w)
    H.metadata["commutator_norm_ring"] = bch_commutator_norm(cycle, w, n_a=max(32, 2 * max(cycle.sites, default=0) + 8))
    H.metadata["coupling_scale"] = max((abs(k) for k in kappas), default=0.0)
    return H
