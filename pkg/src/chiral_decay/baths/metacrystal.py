"""One-dimensional chiral metacrystal with long-range hopping.

The target dispersion is the sawtooth omega(k) = v k on [-pi, pi); its
Fourier series is truncated at range M and optionally windowed to tame the
Gibbs oscillations at the zone edge, where the branch must fold back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..dynamics import DecayTrace
from ..errors import BoundaryReached, DimensionMismatch
from ..model import LevelChain
from .integrate import ExactRun, LatticeState, check_norm, check_times, rk4_evolve

WINDOWS = ("none", "fejer", "lanczos")


@dataclass(frozen=True, eq=False)
class Hoppings:
    """theta_n for n = -M..M, stored at index n + M."""

    theta: np.ndarray
    range_m: int

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.range_m:
            return 0.0j
        return complex(self.theta[n + self.range_m])

    def omega(self, k) -> np.ndarray:
        """omega(k) = sum_n theta_n exp(-i n k) (real by Hermiticity)."""
        k = np.asarray(k, dtype=float)
        n = np.arange(-self.range_m, self.range_m + 1)
        return np.real(np.exp(-1j * np.multiply.outer(k, n)) @ self.theta)

    def velocity(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        n = np.arange(-self.range_m, self.range_m + 1)
        return np.real(np.exp(-1j * np.multiply.outer(k, n)) @ (-1j * n * self.theta))

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.theta)))


def metacrystal_hoppings(v: float, range_m: int, window: str = "fejer") -> Hoppings:
    """Truncated (and windowed) Fourier coefficients of omega(k) = v k.

    theta_0 = 0 and theta_n = -i v (-1)^n / n, so that
    sum_n theta_n exp(-i n k) reproduces v k inside the zone.
    """
    if range_m < 8:
        raise ValueError("range_m must be >= 8")
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}")
    n = np.arange(-range_m, range_m + 1)
    theta = np.zeros(n.size, dtype=complex)
    nz = n != 0
    theta[nz] = -1j * v * (-1.0) ** n[nz] / n[nz]
    if window == "fejer":
        theta *= 1.0 - np.abs(n) / (range_m + 1.0)
    elif window == "lanczos":
        theta *= np.sinc(n / (range_m + 1.0))
    return Hoppings(theta, range_m)


def metacrystal_hamiltonian(hoppings: Hoppings, L: int) -> sp.csr_matrix:
    """Open chain of L sites with H[n, l] = theta_{n-l}."""
    M = hoppings.range_m
    diags, offsets = [], []
    for off in range(-min(M, L - 1), min(M, L - 1) + 1):
        val = hoppings[-off]
        if val != 0:
            diags.append(np.full(L - abs(off), val))
            offsets.append(off)
    if not diags:
        return sp.csr_matrix((L, L), dtype=complex)
    return sp.diags(diags, offsets, shape=(L, L), format="csr", dtype=complex)


def _attach(H_bath: sp.spmatrix, lattice_index: np.ndarray, kappas, omegas) -> sp.csr_matrix:
    nb = H_bath.shape[0]
    n = len(kappas)
    rows, cols, vals = [], [], []
    for a in range(n):
        rows += [nb + a, int(lattice_index[a]), nb + a]
        cols += [int(lattice_index[a]), nb + a, nb + a]
        vals += [kappas[a], kappas[a], omegas[a]]
    coup = sp.coo_matrix((vals, (rows, cols)), shape=(nb + n, nb + n), dtype=complex)
    return (sp.block_diag([H_bath, sp.csr_matrix((n, n))]) + coup).tocsr()


def default_lattice(hoppings: Hoppings, chain: LevelChain, t_max: float) -> tuple[int, int]:
    """(L, origin) keeping the far end out of reach of the forward front.

    The truncated series also carries weak fast backward modes (|v| ~ v M);
    the upstream margin lets them run off before they can reflect back.
    """
    M = hoppings.range_m
    v = max(abs(float(hoppings.velocity(0.0))), 1e-3)
    reach = int(math.ceil(v * t_max))
    origin = M + reach + 10 - int(np.min(chain.sites))
    L = origin + int(np.max(chain.sites)) + int(math.ceil(1.5 * v * t_max)) + 2 * M + 20
    return L, origin


def metacrystal_evolve(
    hoppings: Hoppings,
    L: int | None,
    chain: LevelChain,
    c0,
    times,
    dt: float,
    origin: int | None = None,
) -> ExactRun:
    """Exact single-particle dynamics of levels side-coupled to the metacrystal.

    Level sites are lattice offsets from ``origin``. With ``L=None`` the
    lattice and origin are sized from ``max(times)`` by :func:`default_lattice`.
    Amplitudes follow the caller's level order. Requires
    dt * (sum |theta| + max kappa) <= 0.25.
    """
    t = check_times(times)
    c0 = np.asarray(c0, dtype=complex)
    if c0.shape != (chain.n,):
        raise DimensionMismatch("c0 must have one amplitude per level")
    auto_L, auto_origin = default_lattice(hoppings, chain, float(t[-1]))
    if L is None:
        L = auto_L
    origin = auto_origin if origin is None else int(origin)
    idx = origin + chain.sites
    if np.any(idx < 0) or np.any(idx >= L):
        raise ValueError("level sites fall outside the lattice")
    bound = hoppings.l1_norm() + float(np.max(chain.kappas))
    if dt * bound > 0.25:
        raise ValueError(f"dt={dt} too large; need dt <= {0.25 / bound:.4g}")
    H = _attach(metacrystal_hamiltonian(hoppings, L), idx, chain.kappas, chain.omegas)
    psi0 = np.concatenate([np.zeros(L, dtype=complex), c0])
    far_lo = max(int(np.max(idx)) + 1, L - 5 - hoppings.range_m)

    def guard(tt, psi):
        far = np.sum(np.abs(psi[far_lo:L]) ** 2)
        if far > 1e-6:
            raise BoundaryReached(f"weight {far:.3g} near the far end at t={tt:.4g}; enlarge L")

    samples, psi = rk4_evolve(H, psi0, t, dt, guard)
    drift = check_norm(samples)
    amps = samples[:, L:]
    trace = DecayTrace(t, amps, np.sum(np.abs(amps) ** 2, axis=1))
    return ExactRun(trace, LatticeState(psi[:L], psi[L:], (L,), float(t[-1])), drift)
