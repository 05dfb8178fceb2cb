"""Harper-Hofstadter strip: chiral edge branches and exact level decay.

Gauge: an edge mode of the strip has amplitude A_n exp(+i k m) along the
edge, with A_n solving

    kappa (A_{n+1} + A_{n-1}) + 2 kappa cos(k + n phi) A_n = omega A_n,  A_0 = 0.

The strip Hamiltonian therefore carries the hopping kappa exp(-i phi n) from
(n, m) to (n, m+1). With this choice a positive group velocity moves the
excitation toward larger m, the same convention as the effective model's
phases exp(i k_b (n_a - n_b)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..dynamics import DecayTrace
from ..errors import BoundaryReached, DimensionMismatch, NoGap, Truncation
from ..model import TabulatedChiral
from .integrate import ExactRun, LatticeState, check_norm, check_times, rk4_evolve

EDGE_COLUMNS = 8
EDGE_WEIGHT = 0.9
TRUNCATION_TOL = 1e-6


def flux_fraction(phi: float, max_q: int = 64) -> Fraction:
    """phi / (2 pi) as a fraction p/q; irrational fluxes are rejected."""
    frac = Fraction(phi / (2.0 * math.pi)).limit_denominator(max_q)
    if abs(2.0 * math.pi * float(frac) - phi) > 1e-9:
        raise ValueError(f"flux {phi} is not 2 pi p/q with q <= {max_q}")
    return frac


def harper_bulk_bands(phi: float, kappa: float, n_kx: int = 65, n_ky: int = 129) -> np.ndarray:
    """Bulk magnetic bands as (q, 2) array of [min, max], from the q x q Bloch problem."""
    q = flux_fraction(phi).denominator
    kxs = np.linspace(-math.pi / q, math.pi / q, n_kx)
    kys = np.linspace(-math.pi, math.pi, n_ky)
    lo = np.full(q, np.inf)
    hi = np.full(q, -np.inf)
    rows = np.arange(q)
    for kx in kxs:
        for ky in kys:
            if q == 1:
                e = np.array([2 * kappa * (math.cos(kx) + math.cos(ky))])
            else:
                h = np.diag(2 * kappa * np.cos(ky + rows * phi)).astype(complex)
                h[rows[:-1], rows[1:]] += kappa
                h[rows[1:], rows[:-1]] += kappa
                h[0, q - 1] += kappa * np.exp(-1j * kx * q)
                h[q - 1, 0] += kappa * np.exp(1j * kx * q)
                e = np.linalg.eigvalsh(h)
            lo = np.minimum(lo, e)
            hi = np.maximum(hi, e)
    return np.column_stack([lo, hi])


def bulk_gaps(bands: np.ndarray, min_width: float = 1e-9) -> list[tuple[float, float]]:
    """Open energy intervals between the (merged) bulk bands, bottom to top."""
    order = np.argsort(bands[:, 0])
    merged: list[list[float]] = []
    for lo, hi in bands[order]:
        if merged and lo <= merged[-1][1] + min_width:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(merged[i][1], merged[i + 1][0]) for i in range(len(merged) - 1)]


def harper_column_spectrum(k: float, phi: float, kappa: float, n_max: int):
    """Eigenpairs of the edge-truncated Harper operator at Bloch number k."""
    n = np.arange(1, n_max + 1)
    d = 2.0 * kappa * np.cos(k + n * phi)
    e = np.full(n_max - 1, kappa)
    return sla.eigh_tridiagonal(d, e)


def _edge_samples(k_grid, phi, kappa, n_max, gap):
    lo, hi = gap
    ks, ws = [], []
    for k in k_grid:
        w, v = harper_column_spectrum(k, phi, kappa, n_max)
        weight = np.sum(np.abs(v[:EDGE_COLUMNS, :]) ** 2, axis=0)
        cand = np.nonzero((weight >= EDGE_WEIGHT) & (w > lo) & (w < hi))[0]
        if cand.size:
            j = cand[np.argmax(weight[cand])]
            ks.append(k)
            ws.append(w[j])
    return np.array(ks), np.array(ws)


def _unwrap_branch(ks: np.ndarray, ws: np.ndarray, dk: float):
    """Make a branch that straddles k = +-pi contiguous by shifting its low part by 2 pi.

    Only a branch touching both ends of the zone is treated as wrapped; the
    largest gap between samples is taken as the true break.
    """
    if ks.size < 2:
        return ks, ws
    touches = ks[0] - dk < -math.pi + 1e-12 and ks[-1] + 2 * dk > math.pi - 1e-12
    if not touches:
        return ks, ws
    cut = int(np.argmax(np.diff(ks))) + 1
    ks = np.concatenate([ks[cut:], ks[:cut] + 2.0 * math.pi])
    ws = np.concatenate([ws[cut:], ws[:cut]])
    return ks, ws


@dataclass(frozen=True, eq=False)
class HarperEdgeResult:
    k: np.ndarray
    omega: np.ndarray
    velocity: np.ndarray
    branch: TabulatedChiral | None  # None when the branch has negative group velocity
    bulk_bands: np.ndarray
    gap: tuple[float, float]
    gaps: list[tuple[float, float]]
    truncation_shift: float


def harper_edge_modes(
    phi: float,
    kappa: float,
    n_max: int = 40,
    k_grid=None,
    gap: str = "lower",
    omega: float | None = None,
    check_truncation: bool = True,
) -> HarperEdgeResult:
    """Chiral edge branch of the half-infinite Harper-Hofstadter lattice.

    Modes with at least 90% weight on the first 8 columns and energy inside
    the selected bulk gap form the branch. ``gap`` selects the lowest or the
    highest gap; when ``omega`` is given the gap containing it is used.
    """
    if n_max < 40:
        raise ValueError("n_max must be >= 40")
    if k_grid is None:
        k_grid = np.linspace(-math.pi, math.pi, 1024, endpoint=False)
    k_grid = np.asarray(k_grid, dtype=float)
    bands = harper_bulk_bands(phi, kappa)
    gaps = bulk_gaps(bands)
    if not gaps:
        raise NoGap(f"flux {phi}: bulk bands leave no gap")
    if omega is not None:
        inside = [g for g in gaps if g[0] < omega < g[1]]
        if not inside:
            raise NoGap(f"omega={omega} is not inside a bulk gap {gaps}")
        sel = inside[0]
    elif gap == "lower":
        sel = gaps[0]
    elif gap == "upper":
        sel = gaps[-1]
    else:
        raise ValueError("gap must be 'lower' or 'upper'")

    ks, ws = _edge_samples(k_grid, phi, kappa, n_max, sel)
    if ks.size < 16:
        raise NoGap(f"no edge branch found in gap {sel}")
    shift = 0.0
    if check_truncation:
        ks2, ws2 = _edge_samples(ks, phi, kappa, 2 * n_max, sel)
        common = np.isin(ks, ks2)
        shift = float(np.max(np.abs(ws[common] - ws2[np.isin(ks2, ks)]))) if common.any() else 0.0
        if shift > TRUNCATION_TOL:
            raise Truncation(f"edge branch moved by {shift:.3g} when n_max doubled")
    dk = float(np.min(np.diff(k_grid))) if k_grid.size > 1 else 2 * math.pi
    ks, ws = _unwrap_branch(ks, ws, dk)
    vel = np.gradient(ws, ks)
    branch = None
    if np.all(np.diff(ws) > 0):
        branch = TabulatedChiral(ks, ws)
    return HarperEdgeResult(ks, ws, vel, branch, bands, sel, gaps, shift)


# --------------------------------------------------------------------------
# Exact strip dynamics


@dataclass(frozen=True)
class Attachment:
    n: int  # column, 1 is the physical edge
    m: int  # position along the edge
    kappa: float
    omega: float


def strip_hamiltonian(phi: float, kappa: float, L_n: int, L_m: int) -> sp.csr_matrix:
    """Open L_n x L_m strip; site (n, j) has index (n - 1) * L_m + j."""
    rows, cols, vals = [], [], []
    idx = lambda n, j: (n - 1) * L_m + j  # noqa: E731
    for n in range(1, L_n + 1):
        hop_m = kappa * np.exp(-1j * phi * n)
        for j in range(L_m):
            if n < L_n:
                a, b = idx(n, j), idx(n + 1, j)
                rows += [a, b]
                cols += [b, a]
                vals += [kappa, kappa]
            if j < L_m - 1:
                a, b = idx(n, j), idx(n, j + 1)
                rows += [b, a]
                cols += [a, b]
                vals += [hop_m, np.conj(hop_m)]
    N = L_n * L_m
    return sp.coo_matrix((vals, (rows, cols)), shape=(N, N), dtype=complex).tocsr()


def default_strip(attachments: Sequence[Attachment], t_max: float, kappa: float = 1.0) -> tuple[int, int, int]:
    """(L_n, L_m, m_offset) sized for an edge front moving at ~1.6 kappa, with 2x safety."""
    ms = [a.m for a in attachments]
    m_offset = 16 - min(ms)
    L_m = m_offset + max(ms) + int(math.ceil(2.0 * 1.6 * kappa * t_max)) + 16
    return 24, L_m, m_offset


def hofstadter_evolve(
    phi: float,
    kappa: float,
    attachments: Sequence[Attachment],
    c0,
    times,
    dt: float,
    strip: tuple[int, int] | None = None,
    m_offset: int | None = None,
) -> ExactRun:
    """Exact RK4 dynamics of levels side-coupled to a Harper-Hofstadter strip.

    ``strip = (L_n, L_m)``; attachment m-coordinates are shifted by
    ``m_offset`` into the lattice. Raises :class:`BoundaryReached` if more
    than 1e-6 of the probability gets within 5 sites of the far m-boundary.
    """
    t = check_times(times)
    c0 = np.asarray(c0, dtype=complex)
    if c0.shape != (len(attachments),):
        raise DimensionMismatch("c0 must have one amplitude per attached level")
    if len({(a.n, a.m) for a in attachments}) != len(attachments):
        raise ValueError("attachment sites must be distinct")
    kmax = max((a.kappa for a in attachments), default=0.0)
    if dt > 0.05 / (4.0 * kappa + kmax) + 1e-15:
        raise ValueError(f"dt must be <= 0.05 / (4 kappa + max kappa_a) = {0.05 / (4 * kappa + kmax):.4g}")
    auto = default_strip(attachments, float(t[-1]), kappa)
    L_n, L_m = strip if strip is not None else auto[:2]
    off = auto[2] if m_offset is None else int(m_offset)
    for a in attachments:
        if not (1 <= a.n <= L_n and 0 <= a.m + off < L_m):
            raise ValueError(f"attachment {a} outside the strip")

    H_bath = strip_hamiltonian(phi, kappa, L_n, L_m)
    nb = H_bath.shape[0]
    na = len(attachments)
    rows, cols, vals = [], [], []
    for i, a in enumerate(attachments):
        s = (a.n - 1) * L_m + a.m + off
        rows += [nb + i, s, nb + i]
        cols += [s, nb + i, nb + i]
        vals += [a.kappa, a.kappa, a.omega]
    H = sp.block_diag([H_bath, sp.csr_matrix((na, na))]) + sp.coo_matrix(
        (vals, (rows, cols)), shape=(nb + na, nb + na)
    )
    far_cols = np.concatenate([np.arange(L_m - 5, L_m) + (n - 1) * L_m for n in range(1, L_n + 1)])

    def guard(tt, psi):
        w = float(np.sum(np.abs(psi[far_cols]) ** 2))
        if w > 1e-6:
            raise BoundaryReached(f"weight {w:.3g} within 5 sites of the far m-boundary at t={tt:.4g}")

    psi0 = np.concatenate([np.zeros(nb, dtype=complex), c0])
    samples, psi = rk4_evolve(H, psi0, t, dt, guard)
    drift = check_norm(samples)
    amps = samples[:, nb:]
    trace = DecayTrace(t, amps, np.sum(np.abs(amps) ** 2, axis=1))
    return ExactRun(trace, LatticeState(psi[:nb], psi[nb:], (L_n, L_m), float(t[-1])), drift)
