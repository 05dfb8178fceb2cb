"""Effective non-Hermitian Hamiltonians of level chains coupled to a bath.

Frequencies and couplings are in units of the bath reference hopping rate,
times in the inverse unit. Levels are always sorted by ascending attachment
site before a matrix is assembled, so a chiral build is literally lower
triangular; ``EffectiveHamiltonian.order`` maps rows back to the caller's
level order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import numerics
from .errors import (
    DuplicateSite,
    MultipleRoots,
    NoConvergence,
    NumericalFailure,
    OutOfBand,
    PhysicsPreconditionError,
    QuadratureDivergence,
)

TWO_PI = 2.0 * math.pi
RESONANCE_TOL = 1e-10
BISECTION_ITERATIONS = 80


@dataclass(frozen=True)
class Level:
    omega: float
    kappa: float
    site: int


@dataclass(frozen=True)
class LevelChain:
    levels: tuple[Level, ...]

    def __post_init__(self):
        levels = tuple(
            lv if isinstance(lv, Level) else Level(float(lv[0]), float(lv[1]), int(lv[2])) for lv in self.levels
        )
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ValueError("a level chain needs at least one level")
        for lv in levels:
            if not (math.isfinite(lv.omega) and math.isfinite(lv.kappa)):
                raise ValueError(f"non-finite level parameters: {lv}")
            if lv.kappa < 0:
                raise ValueError(f"coupling must be >= 0, got {lv.kappa}")
        sites = [lv.site for lv in levels]
        if len(set(sites)) != len(sites):
            raise DuplicateSite(f"attachment sites must be distinct, got {sites}")

    @classmethod
    def from_arrays(cls, omegas, kappas, sites) -> "LevelChain":
        omegas, kappas, sites = list(omegas), list(kappas), list(sites)
        if not len(omegas) == len(kappas) == len(sites):
            raise ValueError("level arrays (omega, kappa, site) differ in length")
        return cls(tuple(Level(float(w), float(k), int(s)) for w, k, s in zip(omegas, kappas, sites)))

    @classmethod
    def degenerate(cls, n: int, omega: float, kappa: float, first_site: int = 1) -> "LevelChain":
        """N identical levels on consecutive sites (the order-N exceptional point)."""
        return cls.from_arrays([omega] * n, [kappa] * n, range(first_site, first_site + n))

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def n(self) -> int:
        return len(self.levels)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([lv.omega for lv in self.levels])

    @property
    def kappas(self) -> np.ndarray:
        return np.array([lv.kappa for lv in self.levels])

    @property
    def sites(self) -> np.ndarray:
        return np.array([lv.site for lv in self.levels], dtype=int)

    def sorted_by_site(self) -> tuple["LevelChain", tuple[int, ...]]:
        order = tuple(int(i) for i in np.argsort(self.sites, kind="stable"))
        return LevelChain(tuple(self.levels[i] for i in order)), order


# --------------------------------------------------------------------------
# Dispersions


def wrap_k(k):
    """Map Bloch numbers into [-pi, pi)."""
    return (np.asarray(k, dtype=float) + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class CosineBand:
    """Nearest-neighbour wire, omega(k) = 2 kappa_hop cos k (time-reversal symmetric)."""

    kappa_hop: float
    chiral = False

    def __post_init__(self):
        if not self.kappa_hop > 0:
            raise ValueError("kappa_hop must be > 0")

    def omega(self, k):
        return 2.0 * self.kappa_hop * np.cos(k)

    def velocity(self, k):
        return -2.0 * self.kappa_hop * np.sin(k)

    def band(self) -> tuple[float, float]:
        return (-2.0 * self.kappa_hop, 2.0 * self.kappa_hop)


@dataclass(frozen=True)
class ChiralLinear:
    """omega(k) = omega0 + v k on the zone [-pi, pi)."""

    v: float
    omega0: float = 0.0
    chiral = True

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError("ChiralLinear needs v > 0")

    def omega(self, k):
        return self.omega0 + self.v * wrap_k(k)

    def velocity(self, k):
        return np.full_like(np.asarray(k, dtype=float), self.v)

    def band(self) -> tuple[float, float]:
        return (self.omega0 - self.v * math.pi, self.omega0 + self.v * math.pi)

    def k_domain(self) -> tuple[float, float]:
        return (-math.pi, math.pi)


@dataclass(frozen=True)
class FloquetSawtooth:
    """Quasi-energy of the rectified binary lattice, omega(k) = (pi + k)/T mod 2 pi/T."""

    T: float
    chiral = True

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("Floquet period must be > 0")

    def omega(self, k):
        return ((math.pi + np.asarray(k, dtype=float)) / self.T) % (TWO_PI / self.T)

    def velocity(self, k):
        return np.full_like(np.asarray(k, dtype=float), 1.0 / self.T)

    def band(self) -> tuple[float, float]:
        return (0.0, TWO_PI / self.T)

    def k_domain(self) -> tuple[float, float]:
        return (-math.pi, math.pi)


@dataclass(frozen=True, eq=False)
class TabulatedChiral:
    """Numerically tabulated chiral branch, interpolated with a monotone cubic.

    ``k_samples`` must be strictly increasing over at most one Brillouin zone
    (it may be a sub-interval, e.g. an edge branch that merges into the bulk),
    and ``omega_samples`` strictly increasing.
    """

    k_samples: np.ndarray
    omega_samples: np.ndarray
    chiral = True
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k = np.array(self.k_samples, dtype=float)
        w = np.array(self.omega_samples, dtype=float)
        if k.ndim != 1 or k.shape != w.shape:
            raise ValueError("k_samples and omega_samples must be 1-D and equal length")
        if k.size < 16:
            raise ValueError(f"need at least 16 samples, got {k.size}")
        if np.any(np.diff(k) <= 0):
            raise ValueError("k_samples must be strictly increasing")
        if k[-1] - k[0] > TWO_PI + 1e-12:
            raise ValueError("k_samples span more than one Brillouin zone")
        if np.any(np.diff(w) <= 0):
            raise PhysicsPreconditionError("tabulated branch is not strictly increasing in k")
        k.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "k_samples", k)
        object.__setattr__(self, "omega_samples", w)
        object.__setattr__(self, "_interp", PchipInterpolator(k, w, extrapolate=False))

    def omega(self, k):
        return self._interp(np.asarray(k, dtype=float))

    def velocity(self, k):
        # Centered difference on the interpolant, one-sided at the ends.
        k = np.asarray(k, dtype=float)
        lo, hi = self.k_samples[0], self.k_samples[-1]
        h = 1e-5 * (hi - lo)
        kp = np.minimum(k + h, hi)
        km = np.maximum(k - h, lo)
        return (self._interp(kp) - self._interp(km)) / (kp - km)

    def band(self) -> tuple[float, float]:
        return (float(self.omega_samples[0]), float(self.omega_samples[-1]))

    def k_domain(self) -> tuple[float, float]:
        return (float(self.k_samples[0]), float(self.k_samples[-1]))


Dispersion = Union[CosineBand, ChiralLinear, FloquetSawtooth, TabulatedChiral]


@dataclass(frozen=True)
class Resonance:
    k_beta: float
    v_beta: float


def solve_resonance(dispersion: Dispersion, omega_level: float) -> Resonance:
    """Bloch number and group velocity of the bath mode resonant with a level.

    Bisection on the monotone chiral branch (80 iterations); the returned
    ``k_beta`` lies in [-pi, pi).
    """
    lo, hi = dispersion.band()
    if isinstance(dispersion, CosineBand):
        if lo < omega_level < hi:
            raise MultipleRoots(
                f"omega={omega_level} crosses the symmetric cosine band twice; "
                "use the closed-form bidirectional build"
            )
        raise OutOfBand(f"omega={omega_level} outside band ({lo}, {hi})")
    target = float(omega_level)
    if isinstance(dispersion, FloquetSawtooth):
        # Quasi-energies are defined modulo 2 pi / T.
        target = target % (TWO_PI / dispersion.T)
    elif not (lo < target < hi):
        raise OutOfBand(f"omega={omega_level} outside band ({lo:.6g}, {hi:.6g})")

    a, b = dispersion.k_domain()
    if isinstance(dispersion, (ChiralLinear, FloquetSawtooth)):
        b = math.nextafter(b, a)  # half-open zone
    fa = float(dispersion.omega(a)) - target
    k = a
    if fa != 0.0:
        for _ in range(BISECTION_ITERATIONS):
            k = 0.5 * (a + b)
            fk = float(dispersion.omega(k)) - target
            if fk == 0.0:
                break
            if (fk < 0.0) == (fa < 0.0):
                a, fa = k, fk
            else:
                b = k
    err = abs(float(dispersion.omega(k)) - target)
    if err > RESONANCE_TOL:
        raise NumericalFailure(f"resonance bisection residual {err:.3g} exceeds {RESONANCE_TOL}")
    v = float(np.asarray(dispersion.velocity(k)).reshape(-1)[0])
    if not v > 0:
        raise PhysicsPreconditionError(f"group velocity at resonance is {v}, expected > 0")
    return Resonance(float(wrap_k(k)), v)


# --------------------------------------------------------------------------
# Effective Hamiltonians


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    """N x N non-Hermitian matrix with levels in ascending-site order.

    ``order[i]`` is the index, in the caller's chain, of row/column ``i``.
    ``resonance_meta[i]`` is ``None`` for decoupled levels and for
    bidirectional builds.
    """

    entries: np.ndarray
    kind: str
    chain: LevelChain
    order: tuple[int, ...]
    resonance_meta: tuple[Resonance | None, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        e = np.array(self.entries, dtype=complex)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        if self.kind not in ("unidirectional", "bidirectional"):
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def decay_matrix(self) -> np.ndarray:
        """The Delta matrix in H = diag(omega) - i Delta."""
        return 1j * (self.entries - np.diag(self.chain.omegas))

    def to_caller_order(self, vec) -> np.ndarray:
        """Reorder a sorted-basis vector (or last axis) back to the caller's level order."""
        vec = np.asarray(vec)
        out = np.empty_like(vec)
        out[..., list(self.order)] = vec
        return out

    def from_caller_order(self, vec) -> np.ndarray:
        vec = np.asarray(vec)
        return vec[..., list(self.order)]


def _as_matrix(H) -> np.ndarray:
    return H.entries if isinstance(H, EffectiveHamiltonian) else numerics.as_complex_matrix(H)


def build_unidirectional(chain: LevelChain, dispersion: Dispersion) -> EffectiveHamiltonian:
    """Markovian effective Hamiltonian for a chiral bath.

    Diagonal ``omega_b - i kappa_b^2 / (2 v_b)``; below the diagonal
    ``-i kappa_a kappa_b / v_b * exp(i k_b (n_a - n_b))``; zero above. The
    phase and velocity are those of the column level.
    """
    if not getattr(dispersion, "chiral", False):
        raise PhysicsPreconditionError("unidirectional build needs a chiral dispersion")
    srt, order = chain.sorted_by_site()
    n = srt.n
    w, kap, s = srt.omegas, srt.kappas, srt.sites
    meta: list[Resonance | None] = []
    for lv in srt.levels:
        meta.append(solve_resonance(dispersion, lv.omega) if lv.kappa > 0 else None)
    H = np.zeros((n, n), dtype=complex)
    for b in range(n):
        H[b, b] = w[b]
        res = meta[b]
        if res is None:
            continue
        H[b, b] -= 1j * kap[b] ** 2 / (2.0 * res.v_beta)
        for a in range(b + 1, n):
            H[a, b] = -1j * (kap[a] * kap[b] / res.v_beta) * np.exp(1j * res.k_beta * (s[a] - s[b]))
    return EffectiveHamiltonian(H, "unidirectional", srt, order, tuple(meta))


_I_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


def build_bidirectional(chain: LevelChain, kappa_hop: float) -> EffectiveHamiltonian:
    """Closed-form Markovian Hamiltonian for levels side-coupled to a cosine wire."""
    if not kappa_hop > 0:
        raise ValueError("kappa_hop must be > 0")
    srt, order = chain.sorted_by_site()
    w, kap, s = srt.omegas, srt.kappas, srt.sites
    edge = 2.0 * kappa_hop
    bad = [x for x in w if not abs(x) < edge]
    if bad:
        raise OutOfBand(f"levels {bad} not strictly inside the cosine band (-{edge}, {edge})")
    n = srt.n
    H = np.diag(w).astype(complex)
    root = np.sqrt(4.0 * kappa_hop**2 - w**2)
    for a in range(n):
        for b in range(n):
            d = abs(int(s[a] - s[b]))
            phase = ((root[b] + 1j * w[b]) / edge) ** d
            H[a, b] -= 1j * kap[a] * kap[b] * _I_POWERS[d % 4] * phase / root[b]
    return EffectiveHamiltonian(H, "bidirectional", srt, order, tuple(None for _ in range(n)))


def bidirectional_band_center(chain: LevelChain, kappa_hop: float) -> np.ndarray:
    """Simplified form for all levels at the band centre: -i^(1+|d|) k_a k_b / (2 kappa)."""
    srt, _ = chain.sorted_by_site()
    if np.any(srt.omegas != 0.0):
        raise PhysicsPreconditionError("band-centre form requires omega = 0 for every level")
    kap, s = srt.kappas, srt.sites
    d = np.abs(s[:, None] - s[None, :])
    ipow = np.array(_I_POWERS)[(1 + d) % 4]
    return -ipow * np.outer(kap, kap) / (2.0 * kappa_hop)


def find_bound_states(H, tol: float) -> list[complex]:
    """Eigenvalues with |Im| <= tol, i.e. non-decaying (dark) states."""
    if not tol > 0:
        raise ValueError("tol must be > 0")
    try:
        w = numerics.eigvals(_as_matrix(H))
    except NoConvergence as exc:
        raise NumericalFailure(str(exc)) from exc
    return [complex(x) for x in w if abs(x.imag) <= tol]


# --------------------------------------------------------------------------
# Quadrature oracle for the Markovian matrix elements


def _pv_symmetric(d: int, k_beta: float, v: float, n_grid: int, eps: float, periodize: bool) -> complex:
    """PV integral of exp(i k d) / (v (k - k_beta)) over the zone.

    Nodes are placed symmetrically about the pole and paired, so each pair
    contributes a regular integrand; the excluded window |x| < eps is added
    from the pair integrand's midpoint value. ``periodize`` folds the
    infinitely extended linear band onto the zone, which replaces 1/x by the
    Hilbert kernel cot(x/2)/2.
    """
    phase = np.exp(1j * d * k_beta)
    if periodize:
        kern = lambda x: 0.5 / np.tan(0.5 * x)  # noqa: E731
        a, tail = math.pi, None
    else:
        kern = lambda x: 1.0 / x  # noqa: E731
        a = math.pi - abs(k_beta)
        tail = (a, math.pi + abs(k_beta), -1.0 if k_beta > 0 else 1.0)

    def pair(x):
        return 2j * np.sin(d * x) * kern(x)

    h = TWO_PI / n_grid
    m = max(1, int(round((a - eps) / h)))
    hh = (a - eps) / m
    x = eps + (np.arange(m) + 0.5) * hh
    total = np.sum(pair(x)) * hh
    if eps > 0:
        total += pair(np.array([0.5 * eps]))[0] * eps
    if tail is not None:
        lo, hi, sign = tail
        mt = max(1, int(round((hi - lo) / h)))
        ht = (hi - lo) / mt
        xt = lo + (np.arange(mt) + 0.5) * ht
        # One-sided remainder, on the negative side when k_beta > 0.
        xs = sign * xt
        total += np.sum(np.exp(1j * d * xs) * kern(xs)) * ht
    return complex(phase * total / v)


def delta_numeric(
    chain: LevelChain,
    dispersion: Dispersion,
    grid_points: int = 4096,
    pv_exclusion: float | None = None,
    periodize: bool = True,
) -> np.ndarray:
    """Markovian Delta matrix by direct quadrature (independent of the closed form).

    Delta_ab = (k_a k_b / 2) exp(i k_b d) / v_b  -  i (k_a k_b / 2 pi) PV(...)
    with d = n_a - n_b, the PV integral taken on the linearized band. Rows and
    columns follow ascending site order. A 2x grid refinement must change the
    PV terms by less than 1e-3 (relative) or :class:`QuadratureDivergence` is
    raised; the refined values are returned.
    """
    if grid_points < 1024:
        raise ValueError("grid_points must be >= 1024")
    if not getattr(dispersion, "chiral", False):
        raise PhysicsPreconditionError("quadrature oracle needs a chiral dispersion")
    srt, _ = chain.sorted_by_site()
    kap, s = srt.kappas, srt.sites
    n = srt.n
    res = [solve_resonance(dispersion, lv.omega) if lv.kappa > 0 else None for lv in srt.levels]

    def pv_matrix(ng: int, eps: float) -> np.ndarray:
        P = np.zeros((n, n), dtype=complex)
        for b in range(n):
            if res[b] is None:
                continue
            for a in range(n):
                P[a, b] = _pv_symmetric(int(s[a] - s[b]), res[b].k_beta, res[b].v_beta, ng, eps, periodize)
        return P

    eps1 = TWO_PI / grid_points if pv_exclusion is None else float(pv_exclusion)
    P1 = pv_matrix(grid_points, eps1)
    P2 = pv_matrix(2 * grid_points, 0.5 * eps1)
    scale = max(np.max(np.abs(P2)), 1e-300)
    change = np.max(np.abs(P2 - P1)) / scale
    if change > 1e-3:
        raise QuadratureDivergence(f"PV estimate changed by {change:.3g} under 2x refinement")

    D = np.zeros((n, n), dtype=complex)
    for b in range(n):
        if res[b] is None:
            continue
        for a in range(n):
            kk = kap[a] * kap[b]
            dlt = 0.5 * kk * np.exp(1j * res[b].k_beta * (s[a] - s[b])) / res[b].v_beta
            D[a, b] = dlt - 1j * kk / TWO_PI * P2[a, b]
    return D


def make_chain(levels: Sequence) -> LevelChain:
    """Build a chain from (omega, kappa, site) triples."""
    return LevelChain(tuple(Level(float(w), float(k), int(s)) for w, k, s in levels))
