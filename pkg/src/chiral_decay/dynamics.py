"""Time evolution under the effective Hamiltonian.

The main quantities are survival traces and the sigma_max bound on the
survival probability. Resilience times and damped Bloch oscillations build on
these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import numerics
from .errors import DimensionMismatch, NoCrossing
from .model import ChiralLinear, EffectiveHamiltonian, LevelChain, build_unidirectional

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DecayTrace:
    times: np.ndarray
    amplitudes: np.ndarray  # shape (len(times), N)
    survival: np.ndarray

    @property
    def occupations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True, eq=False)
class QuiescenceResult:
    times: np.ndarray
    sigma_curve: np.ndarray
    optimal_state: np.ndarray
    tau: float | None = None
    p_b: float | None = None


def _matrix(H) -> np.ndarray:
    return H.entries if isinstance(H, EffectiveHamiltonian) else numerics.as_complex_matrix(H)


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty 1-D grid")
    if t[0] != 0.0:
        raise ValueError("times must start at 0")
    if np.any(np.diff(t) < 0):
        raise ValueError("times must be sorted")
    return t


def _uniform_step(t: np.ndarray) -> float | None:
    if t.size < 3:
        return None
    d = np.diff(t)
    if np.allclose(d, d[0], rtol=1e-12, atol=0.0) and d[0] > 0:
        return float(d[0])
    return None


def propagators(H, times) -> np.ndarray:
    """exp(-i H t) for every grid time; uniform grids reuse one step propagator."""
    A = _matrix(H)
    t = _check_times(times)
    n = A.shape[0]
    out = np.empty((t.size, n, n), dtype=complex)
    dt = _uniform_step(t)
    if dt is not None:
        step = numerics.expm(-1j * A * dt)
        out[0] = np.eye(n)
        for j in range(1, t.size):
            out[j] = step @ out[j - 1]
    else:
        for j, tj in enumerate(t):
            out[j] = numerics.expm(-1j * A * tj)
    return out


def propagate(H, c0, times) -> DecayTrace:
    """Integrate i dc/dt = H c from a normalized initial vector."""
    A = _matrix(H)
    c0 = np.asarray(c0, dtype=complex)
    if c0.shape != (A.shape[0],):
        raise DimensionMismatch(f"initial vector has shape {c0.shape}, H is {A.shape}")
    if abs(np.linalg.norm(c0) - 1.0) > NORM_TOL:
        raise ValueError("initial vector must be normalized")
    t = _check_times(times)
    dt = _uniform_step(t)
    amps = np.empty((t.size, A.shape[0]), dtype=complex)
    if dt is not None:
        step = numerics.expm(-1j * A * dt)
        amps[0] = c0
        for j in range(1, t.size):
            amps[j] = step @ amps[j - 1]
    else:
        for j, tj in enumerate(t):
            amps[j] = numerics.expm(-1j * A * tj) @ c0
    surv = np.sum(np.abs(amps) ** 2, axis=1)
    return DecayTrace(t, amps, surv)


def sigma_max_curve(H, times, state_index: int = -1) -> QuiescenceResult:
    """Top eigenvalue of A(t)^H A(t), A(t) = exp(-i H t), on a time grid.

    ``optimal_state`` is the maximizing initial vector at ``times[state_index]``.
    """
    props = propagators(H, times)
    sig = np.empty(props.shape[0])
    vec = None
    idx = state_index % props.shape[0]
    for j, U in enumerate(props):
        r = numerics.largest_singular(U)
        sig[j] = r.sigma
        if j == idx:
            vec = r.vector
    return QuiescenceResult(np.asarray(times, dtype=float), sig, vec)


def quiescence_time(H, p_b: float, t_max: float, dt: float) -> QuiescenceResult:
    """Resilience time: the first time sigma_max falls below ``p_b``.

    Scans a uniform grid, then refines the crossing by bisection to dt/100.
    A grid value exactly equal to ``p_b`` counts as still above it. Raises
    :class:`NoCrossing` when sigma_max stays above ``p_b`` up to ``t_max``.
    """
    if not 0.0 < p_b < 1.0:
        raise ValueError("p_b must lie in (0, 1)")
    if not (dt > 0 and dt <= t_max / 200.0):
        raise ValueError("need 0 < dt <= t_max / 200")
    A = _matrix(H)
    steps = int(math.ceil(t_max / dt - 1e-9))
    t = dt * np.arange(steps + 1)
    curve = sigma_max_curve(A, t)
    below = np.nonzero(curve.sigma_curve < p_b)[0]
    if below.size == 0:
        raise NoCrossing(f"sigma_max stays above {p_b} up to t_max={t_max}", lower_bound=float(t_max))
    j = int(below[0])

    def excess(tt: float) -> float:
        return numerics.largest_singular(numerics.expm(-1j * A * tt)).sigma - p_b

    lo, hi = float(t[j - 1]), float(t[j])
    tau = brentq(excess, lo, hi, xtol=dt / 100.0) if excess(lo) > 0 else lo
    vec = numerics.largest_singular(numerics.expm(-1j * A * tau)).vector
    return QuiescenceResult(t, curve.sigma_curve, vec, tau=float(tau), p_b=p_b)


@dataclass(frozen=True, eq=False)
class BlochResult:
    trace: DecayTrace
    t_b: float
    eigs: np.ndarray
    hamiltonian: EffectiveHamiltonian


def bloch_chain(n: int, c_gradient: float, delta: float, omega1: float = 0.0, v: float | None = None):
    """Equally spaced levels omega_a = omega1 + C (a-1) on consecutive sites.

    Coupling is chosen so that kappa^2 / (2 v) = delta. When ``v`` is not given
    the linear band is made wide enough (v >= span) to hold every level, and
    is centred on the middle of the ladder.
    """
    span = c_gradient * (n - 1)
    if v is None:
        v = max(1.0, span)
    kappa = math.sqrt(2.0 * v * delta)
    omegas = omega1 + c_gradient * np.arange(n)
    chain = LevelChain.from_arrays(omegas, [kappa] * n, range(1, n + 1))
    return chain, ChiralLinear(v=v, omega0=omega1 + 0.5 * span)


def bloch_scenario(
    n: int,
    c_gradient: float,
    delta: float,
    c0,
    times,
    omega1: float = 0.0,
    v: float | None = None,
) -> BlochResult:
    """Damped non-Hermitian Bloch oscillations of a linearly detuned ladder."""
    if not c_gradient > 0:
        raise ValueError("c_gradient must be > 0")
    chain, disp = bloch_chain(n, c_gradient, delta, omega1, v)
    H = build_unidirectional(chain, disp)
    trace = propagate(H, c0, times)
    eigs = numerics.eigvals(H.entries)
    return BlochResult(trace, 2.0 * math.pi / c_gradient, eigs, H)


def fit_decay_rate(times, probability) -> float:
    """Least-squares rate gamma of probability ~ exp(-gamma t) (positive samples only)."""
    t = np.asarray(times, dtype=float)
    p = np.asarray(probability, dtype=float)
    m = p > 1e-300
    slope, _ = np.polyfit(t[m], np.log(p[m]), 1)
    return float(-slope)
