"""Non-decay probability of N non-interacting particles filling N levels."""

from __future__ import annotations

import enum

import numpy as np

from . import numerics
from .errors import TooLarge
from .model import EffectiveHamiltonian, LevelChain, build_unidirectional


class StatisticsKind(str, enum.Enum):
    FERMION = "fermion"
    BOSON = "boson"


def nondecay_probability(H, t: float, stats: StatisticsKind | str) -> float:
    """Probability that none of the N particles has decayed at time ``t``.

    Fermions: |det U|^2, evaluated through det exp(X) = exp(tr X), so only the
    trace of H enters. Bosons: |perm U|^2 with U = exp(-i H t).
    """
    stats = StatisticsKind(stats)
    if t < 0:
        raise ValueError("t must be >= 0")
    A = H.entries if isinstance(H, EffectiveHamiltonian) else numerics.as_complex_matrix(H)
    if stats is StatisticsKind.FERMION:
        return float(np.exp(2.0 * t * np.trace(A).imag))
    if A.shape[0] > numerics.PERMANENT_MAX_N:
        raise TooLarge(f"boson permanent limited to N <= {numerics.PERMANENT_MAX_N}")
    U = numerics.expm(-1j * A * t)
    return float(abs(numerics.permanent(U)) ** 2)


def nondecay_curve(H, times) -> tuple[np.ndarray, np.ndarray]:
    """Fermion and boson non-decay probabilities on a time grid."""
    t = np.asarray(times, dtype=float)
    pf = np.array([nondecay_probability(H, x, StatisticsKind.FERMION) for x in t])
    pb = np.array([nondecay_probability(H, x, StatisticsKind.BOSON) for x in t])
    return pf, pb


def chiral_decay_rate(chain: LevelChain, dispersion) -> float:
    """Total chiral decay rate, sum over levels of kappa^2 / v at resonance."""
    H = build_unidirectional(chain, dispersion)
    rate = 0.0
    for lv, res in zip(H.chain.levels, H.resonance_meta):
        if res is not None:
            rate += lv.kappa**2 / res.v_beta
    return rate
