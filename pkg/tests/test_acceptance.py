"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also collected into an "acceptance criteria" section of the summary.
"""

import itertools
import math
import time

import numpy as np
import pytest

from chiral_decay import numerics
from chiral_decay.baths.floquet import FloquetCycle, bath_cycle_operator, floquet_cycle_evolve, floquet_effective, shift_operator
from chiral_decay.baths.hofstadter import Attachment, harper_edge_modes, hofstadter_evolve
from chiral_decay.dynamics import bloch_scenario, propagate, quiescence_time
from chiral_decay.manybody import chiral_decay_rate, nondecay_probability
from chiral_decay.model import (
    ChiralLinear,
    LevelChain,
    build_bidirectional,
    build_unidirectional,
    delta_numeric,
    find_bound_states,
    solve_resonance,
)

pytestmark = pytest.mark.acceptance


def random_chiral_chain(rng, n, v=None):
    sites = rng.choice(np.arange(-40, 41), size=n, replace=False)
    kappas = rng.uniform(0.05, 0.6, n)
    omegas = rng.uniform(-1.0, 1.0, n)
    return LevelChain.from_arrays(omegas, kappas, sites), ChiralLinear(v=rng.uniform(0.5, 3.0) if v is None else v)


def test_criterion_01_triangular_structure(criterion, rng):
    start = time.perf_counter()
    worst_upper, worst_eig = 0.0, 0.0
    for _ in range(200):
        chain, disp = random_chiral_chain(rng, int(rng.integers(1, 11)))
        H = build_unidirectional(chain, disp).entries
        worst_upper = max(worst_upper, float(np.max(np.abs(np.triu(H, 1)), initial=0.0)))
        eigs = np.sort_complex(numerics.eigvals(H))
        worst_eig = max(worst_eig, float(np.max(np.abs(eigs - np.sort_complex(np.diag(H))))))
    elapsed = time.perf_counter() - start
    ok = worst_upper == 0.0 and worst_eig <= 1e-12 and elapsed < 1.0
    criterion(1, "triangular structure", ok, f"max upper={worst_upper:.1g} eig err={worst_eig:.1g} t={elapsed:.2f}s")
    assert ok


def test_criterion_02_bound_state_dichotomy(criterion, rng):
    start = time.perf_counter()
    uni_found = 0
    for _ in range(50):
        chain, disp = random_chiral_chain(rng, int(rng.integers(1, 8)))
        uni_found += len(find_bound_states(build_unidirectional(chain, disp), 1e-9))
    counts = {}
    for sep in range(1, 9):
        H = build_bidirectional(LevelChain.from_arrays([0.0, 0.0], [0.3, 0.3], [0, sep]), 1.0)
        counts[sep] = len(find_bound_states(H, 1e-12))
    elapsed = time.perf_counter() - start
    parity = all(counts[s] == (1 if s % 2 == 0 else 0) for s in counts)
    ok = uni_found == 0 and parity and elapsed < 1.0
    criterion(2, "no-BIC vs BIC", ok, f"unidirectional BICs={uni_found} bidirectional counts={counts} t={elapsed:.2f}s")
    assert ok


def test_criterion_03_markov_oracle(criterion, rng):
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 6))
        sites = rng.choice(np.arange(0, 30), size=n, replace=False)
        kappas = rng.uniform(0.02, 0.2, n)
        v = rng.uniform(50 * kappas.max() ** 2, 3.0)
        chain = LevelChain.from_arrays(rng.uniform(-1, 1, n), kappas, sites)
        disp = ChiralLinear(v=v)
        D = delta_numeric(chain, disp)
        closed = build_unidirectional(chain, disp).decay_matrix()
        worst = max(worst, float(np.max(np.abs(D - closed)) / np.max(np.abs(closed))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-2 and elapsed < 30.0
    criterion(3, "Markov oracle", ok, f"max rel error={worst:.2g} t={elapsed:.2f}s")
    assert ok


def test_criterion_04_exceptional_point(criterion):
    start = time.perf_counter()
    details, ok = [], True
    delta = 1.0
    t = np.linspace(0, 6, 61)
    for n in range(2, 7):
        H = build_unidirectional(LevelChain.degenerate(n, 0.0, math.sqrt(2 * delta)), ChiralLinear(v=1.0)).entries
        lam = H[0, 0]
        single = bool(np.all(np.diag(H) == lam))
        s = np.linalg.svd(H - lam * np.eye(n), compute_uv=False)
        rank = int(np.sum(s > 1e-8))
        c = propagate(H, np.eye(n)[0], t).amplitudes[:, -1] * np.exp(delta * t)
        V = np.vander(t, n)
        coef, *_ = np.linalg.lstsq(V, c, rcond=None)
        resid = float(np.max(np.abs(V @ coef - c)))
        ok &= single and rank == n - 1 and resid < 1e-8
        details.append(f"N={n}:rank={rank},res={resid:.1g}")
    elapsed = time.perf_counter() - start
    criterion(4, "EP order N", ok, " ".join(details) + f" t={elapsed:.2f}s")
    assert ok


def test_criterion_05_quiescence(criterion):
    start = time.perf_counter()

    def H(n):
        return build_unidirectional(LevelChain.degenerate(n, 0.0, math.sqrt(2.0)), ChiralLinear(v=1.0))

    tau20 = quiescence_time(H(20), 0.97, 40.0, 0.1).tau
    ns = np.arange(4, 21)
    corr = {}
    for pb in (0.996, 0.97, 0.5):
        taus = [quiescence_time(H(int(n)), pb, 60.0, 0.1).tau for n in ns]
        corr[pb] = float(np.corrcoef(ns, taus)[0, 1])
    elapsed = time.perf_counter() - start
    ok = 24 <= tau20 <= 32 and min(corr.values()) >= 0.98 and elapsed < 60.0
    cs = ", ".join(f"r({pb})={c:.4f}" for pb, c in corr.items())
    criterion(5, "quiescence", ok, f"tau(N=20, 0.97)={tau20:.4f} {cs} t={elapsed:.2f}s")
    assert ok


def test_criterion_06_bloch(criterion, rng):
    start = time.perf_counter()
    delta, C = 1.0, 10.0
    TB = 2 * math.pi / C
    ts = np.sort(rng.uniform(0, 3, 50))
    grid = np.unique(np.concatenate([[0.0], ts, ts + TB]))
    res = bloch_scenario(6, C, delta, np.eye(6)[0], grid)
    spacing_exact = bool(np.array_equal(np.diff(np.sort(res.eigs.real)), np.full(5, C)))
    P = dict(zip(res.trace.times, res.trace.survival))
    err = max(abs(P[t + TB] - math.exp(-2 * delta * TB) * P[t]) / P[t] for t in ts)
    elapsed = time.perf_counter() - start
    ok = spacing_exact and err <= 1e-8 and elapsed < 5.0
    criterion(6, "Bloch oscillations", ok, f"spacing exact={spacing_exact} max rel err={err:.1g} t={elapsed:.2f}s")
    assert ok


def test_criterion_07_hofstadter(criterion):
    start = time.perf_counter()
    phi = math.pi / 2
    edge = harper_edge_modes(phi, 1.0, gap="lower", omega=-1.5)
    res = solve_resonance(edge.branch, -1.5)
    k_ok = abs(res.k_beta - 2.536) <= 0.02 * 2.536
    v_ok = abs(res.v_beta - 1.6) <= 0.02 * 1.6

    t = np.linspace(0, 150, 301)
    dt = 0.05 / (4.0 + 0.2)
    fwd = [Attachment(1, 0, 0.2, -1.5), Attachment(1, 3, 0.2, -1.5)]
    run = hofstadter_evolve(phi, 1.0, fwd, [1, 0], t, dt)
    rms = float(np.sqrt(np.mean((run.occupations[:, 0] - np.exp(-0.025 * t)) ** 2)))
    rms_ok = rms <= 0.05

    # level 1 downstream at m=3, level 2 upstream at m=0
    swapped = [Attachment(1, 3, 0.2, -1.5), Attachment(1, 0, 0.2, -1.5)]
    up = hofstadter_evolve(phi, 1.0, swapped, [1, 0], t, dt)
    leak = float(up.occupations[:, 1].max() / up.occupations[:, 0].max())
    leak_ok = leak < 1e-3
    elapsed = time.perf_counter() - start
    ok = k_ok and v_ok and rms_ok and leak_ok and elapsed < 120.0
    criterion(
        7,
        "Hofstadter bath",
        ok,
        f"k_beta={res.k_beta:.4f} [{'ok' if k_ok else 'out'}] v_beta={res.v_beta:.4f} [{'ok' if v_ok else 'out'}] "
        f"rms={rms:.3g} [{'ok' if rms_ok else 'out'}] upstream={leak:.2g} [{'ok' if leak_ok else 'out'}] t={elapsed:.1f}s",
    )
    assert ok


def test_criterion_08_floquet(criterion):
    start = time.perf_counter()
    shift_err = float(np.max(np.abs(bath_cycle_operator(32) - shift_operator(32))))
    T = 1.0
    kappa = 3 * math.pi / (2 * T)
    cycle = FloquetCycle.standard(T, T / 3, [0.15 * kappa, 0.15 * kappa], [0, 2])
    run = floquet_cycle_evolve(cycle, 140, [0.0, 0.0], [1, 0], 60)
    H = floquet_effective(cycle, [0.0, 0.0])
    eff = propagate(H, [1, 0], T * np.arange(61)).occupations
    rms = np.sqrt(np.mean((run.occupations - eff) ** 2, axis=0))
    elapsed = time.perf_counter() - start
    ok = shift_err <= 1e-12 and bool(np.all(rms <= 0.03)) and elapsed < 30.0
    criterion(8, "Floquet bath", ok, f"shift err={shift_err:.1g} rms c1={rms[0]:.3g} c2={rms[1]:.3g} t={elapsed:.2f}s")
    assert ok


def taylor_expm(A, terms=30):
    out = np.eye(A.shape[0], dtype=complex)
    term = out.copy()
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def test_criterion_09_manybody(criterion, rng):
    start = time.perf_counter()
    uni_err = 0.0
    for n in range(1, 11):
        chain, disp = random_chiral_chain(rng, n)
        H = build_unidirectional(chain, disp)
        rate = chiral_decay_rate(chain, disp)
        for t in rng.uniform(0, 20, 50):
            ref = math.exp(-rate * t)
            for stats in ("fermion", "boson"):
                uni_err = max(uni_err, abs(nondecay_probability(H, t, stats) - ref))
    bi_err = 0.0
    H = build_bidirectional(LevelChain.from_arrays([0.0, 0.0], [0.3, 0.3], [0, 1]), 1.0)
    for t in (0.3, 1.0, 2.5):
        U = taylor_expm(-1j * H.entries * t)
        pf = abs(U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]) ** 2
        pb = abs(U[0, 0] * U[1, 1] + U[0, 1] * U[1, 0]) ** 2
        bi_err = max(bi_err, abs(nondecay_probability(H, t, "fermion") - pf) / pf)
        bi_err = max(bi_err, abs(nondecay_probability(H, t, "boson") - pb) / pb)
    elapsed = time.perf_counter() - start
    ok = uni_err <= 1e-10 and bi_err <= 1e-8 and elapsed < 5.0
    criterion(9, "many-body", ok, f"unidirectional err={uni_err:.1g} bidirectional oracle err={bi_err:.1g} t={elapsed:.2f}s")
    assert ok


def naive_permanent(A):
    n = A.shape[0]
    return sum(np.prod([A[i, p[i]] for i in range(n)]) for p in itertools.permutations(range(n)))


def test_criterion_10_kernels(criterion, rng):
    start = time.perf_counter()
    inv_err = det_err = ryser_err = 0.0
    tri_exact = True
    for _ in range(40):
        n = int(rng.integers(1, 8))
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        A *= 2.0 / np.linalg.norm(A, 2)
        E = numerics.expm(A)
        inv_err = max(inv_err, float(np.max(np.abs(E @ numerics.expm(-A) - np.eye(n)))))
        ref = np.exp(np.trace(A))
        det_err = max(det_err, abs(numerics.determinant(E) - ref) / abs(ref))
        L = np.tril(A)
        tri_exact &= numerics.permanent(L) == numerics.determinant(L)
        ryser_err = max(ryser_err, abs(numerics.permanent(A) - naive_permanent(A)) / naive_permanent(np.abs(A)))
    elapsed = time.perf_counter() - start
    ok = inv_err <= 1e-10 and det_err <= 1e-8 and tri_exact and ryser_err <= 1e-10 and elapsed < 10.0
    criterion(
        10,
        "kernel suite",
        ok,
        f"inverse={inv_err:.1g} det={det_err:.1g} triangular exact={tri_exact} ryser={ryser_err:.1g} t={elapsed:.2f}s",
    )
    assert ok
