"""Scenario runners behind the command line.

Each runner takes a validated parameter dict, writes its CSV (and optional
SVG) artifacts into an output directory and returns a one-line summary.
Default parameters reproduce the corresponding figure setups.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import numerics
from .baths.floquet import FloquetCycle, floquet_cycle_evolve, floquet_effective
from .baths.hofstadter import Attachment, harper_edge_modes, hofstadter_evolve
from .dynamics import DecayTrace, bloch_scenario, fit_decay_rate, propagate, quiescence_time, sigma_max_curve
from .errors import NoCrossing
from .manybody import chiral_decay_rate, nondecay_curve
from .model import (
    ChiralLinear,
    CosineBand,
    FloquetSawtooth,
    LevelChain,
    build_bidirectional,
    build_unidirectional,
    delta_numeric,
)

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class Param:
    kind: str  # float, int, str, bool, floats, ints
    default: Any
    help: str
    choices: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    summary: str
    params: dict[str, Param]
    run: Callable[[dict, "Output"], str] = field(repr=False)


@dataclass
class Output:
    directory: Path
    emit_svg: bool
    written: list[Path] = field(default_factory=list)

    def path(self, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        p = self.directory / name
        self.written.append(p)
        return p

    def csv(self, name: str, header: list[str], columns) -> Path:
        data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
        p = self.path(name)
        np.savetxt(p, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
        return p

    def trace(self, name: str, trace: DecayTrace) -> Path:
        header, cols = ["t"], [trace.times]
        for a in range(trace.amplitudes.shape[1]):
            header += [f"re_c{a + 1}", f"im_c{a + 1}"]
            cols += [trace.amplitudes[:, a].real, trace.amplitudes[:, a].imag]
        header.append("survival")
        cols.append(trace.survival)
        return self.csv(name, header, cols)

    def svg(self, name: str, plot: Callable[[Path], Any]) -> None:
        if self.emit_svg:
            plot(self.path(name))


def worker_count() -> int:
    """Thread cap from CHIRAL_DECAY_THREADS (0 or unset: one per CPU)."""
    raw = os.environ.get("CHIRAL_DECAY_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("CHIRAL_DECAY_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _time_grid(p) -> np.ndarray:
    if p["n_times"] < 2 or not p["t_max"] > 0:
        raise ValueError("need n_times >= 2 and t_max > 0")
    return np.linspace(0.0, p["t_max"], p["n_times"])


def _unit(n: int, index: int) -> np.ndarray:
    if not 1 <= index <= n:
        raise ValueError(f"excite must be between 1 and {n}")
    c = np.zeros(n, dtype=complex)
    c[index - 1] = 1.0
    return c


def _chain(p) -> LevelChain:
    return LevelChain.from_arrays(p["omegas"], p["kappas"], p["sites"])


def _plot_occupations(out: Output, name: str, trace: DecayTrace, title: str, extra=()):
    from .plotting import line_plot

    series = [(f"|c{a + 1}|^2", trace.occupations[:, a]) for a in range(trace.amplitudes.shape[1])]
    series += list(extra)
    out.svg(name, lambda p: line_plot(p, trace.times, series, "t", "occupation", title))


def _plot_dispersion(out: Output, k, w, title: str):
    from .plotting import line_plot

    out.svg("dispersion.svg", lambda p: line_plot(p, k, [("omega(k)", w)], "k", "omega", title))


def _plot_eigs(out: Output, eigs, title: str):
    from .plotting import scatter_plot

    out.svg("eigs.svg", lambda p: scatter_plot(p, eigs.real, eigs.imag, "Re", "Im", title))


# --------------------------------------------------------------------------
# effective


def _bath_dispersion(p):
    bath = p["bath"]
    if bath == "linear":
        return ChiralLinear(v=p["v"], omega0=p["omega0"])
    if bath == "floquet":
        return FloquetSawtooth(p["period"])
    if bath == "hofstadter":
        res = harper_edge_modes(p["phi"], p["kappa_lattice"], gap=p["gap"])
        if res.branch is None:
            raise ValueError(f"the {p['gap']} gap branch has negative group velocity; pick the lower gap")
        return res.branch
    return CosineBand(p["kappa_hop"])


def _dispersion_table(disp, n: int = 512):
    if isinstance(disp, CosineBand):
        k = np.linspace(-math.pi, math.pi, n, endpoint=False)
    else:
        a, b = disp.k_domain()
        k = np.linspace(a, b, n, endpoint=False)
    return k, np.asarray(disp.omega(k), dtype=float), np.asarray(disp.velocity(k), dtype=float)


def run_effective(p, out: Output) -> str:
    chain = _chain(p)
    disp = _bath_dispersion(p)
    if isinstance(disp, CosineBand):
        H = build_bidirectional(chain, p["kappa_hop"])
    else:
        H = build_unidirectional(chain, disp)
    eigs = numerics.eigvals(H.entries)
    t = _time_grid(p)
    c0 = H.from_caller_order(_unit(chain.n, p["excite"]))
    tr = propagate(H, c0, t)
    tr = DecayTrace(t, H.to_caller_order(tr.amplitudes), tr.survival)
    out.csv("eigs.csv", ["re", "im"], [eigs.real, eigs.imag])
    out.trace("trace.csv", tr)
    k, w, v = _dispersion_table(disp)
    out.csv("dispersion.csv", ["k", "omega", "v"], [k, w, v])
    _plot_occupations(out, "trace.svg", tr, f"effective model, {p['bath']} bath")
    _plot_eigs(out, eigs, "eigenvalues of H")
    _plot_dispersion(out, k, w, f"{p['bath']} bath")
    diag = np.diag(H.entries)
    meta = ""
    if H.resonance_meta and H.resonance_meta[0] is not None:
        r = H.resonance_meta[0]
        meta = f" k_beta={r.k_beta:.6g} v_beta={r.v_beta:.6g}"
    return f"effective: kind={H.kind} N={H.n} max_decay={-diag.imag.min():.6g}{meta}"


# --------------------------------------------------------------------------
# decay, quiescence, bloch


def _degenerate(n: int, delta: float) -> tuple[LevelChain, ChiralLinear]:
    v = 1.0
    return LevelChain.degenerate(n, 0.0, math.sqrt(2.0 * v * delta)), ChiralLinear(v=v)


def run_decay(p, out: Output) -> str:
    chain, disp = _degenerate(p["n"], p["delta"])
    H = build_unidirectional(chain, disp)
    t = _time_grid(p)
    if p["init"] == "optimal":
        q = quiescence_time(H, p["pb"], p["t_max"], p["t_max"] / 400.0)
        c0 = q.optimal_state
        note = f" tau={q.tau:.6g}"
    else:
        c0 = _unit(chain.n, 1)
        note = ""
    tr = propagate(H, c0, t)
    sig = sigma_max_curve(H, t)
    out.trace("trace.csv", tr)
    out.csv("sigma_max.csv", ["t", "sigma_max"], [t, sig.sigma_curve])
    from .plotting import line_plot

    out.svg(
        "trace.svg",
        lambda path: line_plot(path, t, [("P(t)", tr.survival), ("sigma_max(t)", sig.sigma_curve)], "t", "probability"),
    )
    gap = float(np.max(tr.survival - sig.sigma_curve))
    return f"decay: N={chain.n} init={p['init']}{note} P(t_max)={tr.survival[-1]:.6g} max(P-sigma_max)={gap:.3g}"


def _tau_row(n: int, delta: float, pbs, t_max: float, dt: float) -> list[float]:
    chain, disp = _degenerate(n, delta)
    H = build_unidirectional(chain, disp)
    row = []
    for pb in pbs:
        try:
            row.append(quiescence_time(H, pb, t_max, dt).tau)
        except NoCrossing:
            row.append(math.nan)
    return row


SWEEP_PB = (0.996, 0.97, 0.5)


def run_quiescence(p, out: Output) -> str:
    chain, disp = _degenerate(p["n"], p["delta"])
    H = build_unidirectional(chain, disp)
    q = quiescence_time(H, p["pb"], p["t_max"], p["dt"])
    out.csv("sigma_max.csv", ["t", "sigma_max"], [q.times, q.sigma_curve])
    tr = propagate(H, q.optimal_state, q.times)
    out.trace("trace.csv", tr)
    ns = list(range(p["sweep_n_min"], p["sweep_n_max"] + 1, p["sweep_n_step"]))
    corr_note = ""
    if ns:
        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            rows = list(pool.map(lambda n: _tau_row(n, p["delta"], SWEEP_PB, p["t_max"], p["dt"]), ns))
        taus = np.array(rows)
        out.csv("tau_vs_n.csv", ["n", "tau_pb0996", "tau_pb097", "tau_pb05"], [ns, *taus.T])
        if len(ns) > 2 and np.all(np.isfinite(taus)):
            corr = min(float(np.corrcoef(ns, taus[:, j])[0, 1]) for j in range(3))
            corr_note = f" min_corr={corr:.4f}"
        from .plotting import line_plot

        out.svg(
            "tau_vs_n.svg",
            lambda path: line_plot(
                path, ns, [(f"P_b={pb}", taus[:, j]) for j, pb in enumerate(SWEEP_PB)], "N", "tau", markers=True
            ),
        )
    from .plotting import line_plot

    out.svg("sigma_max.svg", lambda path: line_plot(path, q.times, [("sigma_max", q.sigma_curve)], "t", "sigma_max"))
    return f"quiescence: N={p['n']} p_b={p['pb']} tau={q.tau:.6g}{corr_note}"


def run_bloch(p, out: Output) -> str:
    delta = p["delta"]
    C = p["c_over_delta"] * delta
    t = _time_grid(p)
    res = bloch_scenario(p["n"], C, delta, _unit(p["n"], 1), t)
    eigs = np.sort_complex(res.eigs)
    out.trace("trace.csv", res.trace)
    out.csv("eigs.csv", ["re", "im"], [eigs.real, eigs.imag])
    _plot_occupations(out, "trace.svg", res.trace, "damped Bloch oscillations")
    _plot_eigs(out, eigs, "eigenvalues")
    spacing = float(np.mean(np.diff(eigs.real))) if eigs.size > 1 else math.nan
    return f"bloch: N={p['n']} C={C:.6g} T_B={res.t_b:.10g} eig_spacing={spacing:.10g}"


# --------------------------------------------------------------------------
# exact baths


def run_hofstadter(p, out: Output) -> str:
    phi, kap = p["phi"], p["kappa_lattice"]
    edge = harper_edge_modes(phi, kap, gap="lower")
    chain = LevelChain.from_arrays(p["omegas"], p["kappas"], p["sites"])
    H = build_unidirectional(chain, edge.branch)
    atts = [Attachment(1, int(s), float(k), float(w)) for w, k, s in zip(p["omegas"], p["kappas"], p["sites"])]
    kmax = max(p["kappas"])
    dt = p["dt"] if p["dt"] > 0 else 0.05 / (4.0 * kap + kmax)
    t = _time_grid(p)
    c0 = _unit(chain.n, p["excite"])
    run = hofstadter_evolve(phi, kap, atts, c0, t, dt)
    eff = propagate(H, H.from_caller_order(c0), t)
    eff = DecayTrace(t, H.to_caller_order(eff.amplitudes), eff.survival)
    out.trace("trace.csv", run.trace)
    out.trace("trace_effective.csv", eff)
    out.csv("dispersion.csv", ["k", "omega", "v"], [edge.k, edge.omega, edge.velocity])
    rms = float(np.sqrt(np.mean((run.occupations[:, p["excite"] - 1] - eff.occupations[:, p["excite"] - 1]) ** 2)))
    _plot_occupations(
        out, "trace.svg", run.trace, "strip (exact) vs effective",
        extra=[(f"|c{a + 1}|^2 effective", eff.occupations[:, a]) for a in range(chain.n)],
    )
    _plot_dispersion(out, edge.k, edge.omega, "edge branch, lower gap")
    r = H.resonance_meta[0]
    return (
        f"hofstadter: k_beta={r.k_beta:.6g} v_beta={r.v_beta:.6g} rms={rms:.4g} "
        f"norm_drift={run.norm_drift:.2g}"
    )


def run_floquet(p, out: Output) -> str:
    T = p["period"]
    t2 = p["t2_fraction"] * T
    t1 = 0.5 * (T - t2)
    kappa_bath = math.pi / (2.0 * t1)
    rho = [p["rho_over_kappa"] * kappa_bath] * len(p["sites"])
    cycle = FloquetCycle.standard(T, t2, rho, p["sites"])
    n = cycle.n_levels
    if len(p["omegas"]) != n:
        raise ValueError("omegas and sites must have equal length")
    c0 = _unit(n, p["excite"])
    size = 2 * (p["n_cycles"] + max(p["sites"]) - min(p["sites"]) + 8)
    origin = 2 - min(p["sites"])
    run = floquet_cycle_evolve(cycle, size, p["omegas"], c0, p["n_cycles"], origin=origin)
    H = floquet_effective(cycle, p["omegas"])
    t = run.trace.times
    eff = propagate(H, H.from_caller_order(c0), t)
    eff = DecayTrace(t, H.to_caller_order(eff.amplitudes), eff.survival)
    out.trace("trace.csv", run.trace)
    out.trace("trace_effective.csv", eff)
    k, w, v = _dispersion_table(FloquetSawtooth(T))
    out.csv("dispersion.csv", ["k", "omega", "v"], [k, w, v])
    rms = np.sqrt(np.mean((run.occupations - eff.occupations) ** 2, axis=0))
    _plot_occupations(
        out, "trace.svg", run.trace, "stroboscopic (exact) vs effective",
        extra=[(f"|c{a + 1}|^2 effective", eff.occupations[:, a]) for a in range(n)],
    )
    _plot_dispersion(out, k, w, "Floquet quasi-energy")
    delta = float(-np.diag(H.entries).imag.max())
    return f"floquet: Delta*T={delta * T:.6g} rms=" + ",".join(f"{x:.4g}" for x in rms)


# --------------------------------------------------------------------------
# many-body and Markov check


def run_manybody(p, out: Output) -> str:
    chain = _chain(p)
    if p["bath"] == "cosine":
        H = build_bidirectional(chain, p["kappa_hop"])
        rate = math.nan
    else:
        disp = ChiralLinear(v=p["v"], omega0=p["omega0"])
        H = build_unidirectional(chain, disp)
        rate = chiral_decay_rate(chain, disp)
    t = _time_grid(p)
    pf, pb = nondecay_curve(H.entries, t)
    tr = propagate(H.entries, _unit(chain.n, 1), t)
    out.csv("manybody.csv", ["t", "p_fermi", "p_bose"], [t, pf, pb])
    out.trace("trace.csv", tr)
    from .plotting import line_plot

    out.svg(
        "manybody.svg",
        lambda path: line_plot(path, t, [("fermions", pf), ("bosons", pb)], "t", "non-decay probability", logy=True),
    )
    fit = fit_decay_rate(t, pf)
    return f"manybody: bath={p['bath']} fermion_rate={fit:.6g} sum_kappa2_over_v={rate:.6g} max|pf-pb|={np.max(np.abs(pf - pb)):.3g}"


def run_verify_markov(p, out: Output) -> str:
    chain = _chain(p)
    disp = ChiralLinear(v=p["v"], omega0=p["omega0"])
    H = build_unidirectional(chain, disp)
    closed = H.decay_matrix()
    num = delta_numeric(chain, disp, grid_points=p["grid_points"])
    n = H.n
    a, b = np.indices((n, n))
    out.csv(
        "markov.csv",
        ["row", "col", "re_closed", "im_closed", "re_numeric", "im_numeric"],
        [a.ravel() + 1, b.ravel() + 1, closed.real.ravel(), closed.imag.ravel(), num.real.ravel(), num.imag.ravel()],
    )
    t = _time_grid(p)
    tr = propagate(H, H.from_caller_order(_unit(chain.n, 1)), t)
    out.trace("trace.csv", DecayTrace(t, H.to_caller_order(tr.amplitudes), tr.survival))
    scale = max(float(np.max(np.abs(closed))), 1e-300)
    err = float(np.max(np.abs(num - closed))) / scale
    return f"verify-markov: N={n} max_rel_error={err:.3g}"


# --------------------------------------------------------------------------

_LEVELS_4D = {
    "omegas": Param("floats", [-1.5, -1.5], "level frequencies"),
    "kappas": Param("floats", [0.2, 0.2], "level couplings"),
    "sites": Param("ints", [0, 3], "attachment sites"),
}

SCENARIOS: dict[str, Scenario] = {
    s.name: s
    for s in [
        Scenario(
            "effective",
            "build the effective Hamiltonian and propagate it",
            {
                **_LEVELS_4D,
                "bath": Param("str", "hofstadter", "bath dispersion", ("hofstadter", "linear", "cosine", "floquet")),
                "gap": Param("str", "lower", "Hofstadter gap", ("lower", "upper")),
                "phi": Param("float", HALF_PI, "flux per plaquette"),
                "kappa_lattice": Param("float", 1.0, "Hofstadter hopping"),
                "v": Param("float", 1.0, "group velocity of the linear bath"),
                "omega0": Param("float", 0.0, "linear bath frequency at k=0"),
                "kappa_hop": Param("float", 1.0, "cosine-band hopping"),
                "period": Param("float", 1.0, "Floquet period"),
                "excite": Param("int", 1, "initially excited level (1-based)"),
                "t_max": Param("float", 150.0, "final time"),
                "n_times": Param("int", 301, "time samples"),
            },
            run_effective,
        ),
        Scenario(
            "decay",
            "survival of the degenerate chain from the resilient state",
            {
                "n": Param("int", 20, "number of levels"),
                "delta": Param("float", 1.0, "single-level rate kappa^2/(2v)"),
                "pb": Param("float", 0.97, "reference level defining the resilient state"),
                "init": Param("str", "optimal", "initial state", ("optimal", "level1")),
                "t_max": Param("float", 40.0, "final time"),
                "n_times": Param("int", 401, "time samples"),
            },
            run_decay,
        ),
        Scenario(
            "quiescence",
            "sigma_max(t) and the growth of the resilience time with N",
            {
                "n": Param("int", 20, "number of levels"),
                "delta": Param("float", 1.0, "single-level rate kappa^2/(2v)"),
                "pb": Param("float", 0.97, "reference level P_b"),
                "t_max": Param("float", 40.0, "scan horizon"),
                "dt": Param("float", 0.1, "scan step (<= t_max/200)"),
                "sweep_n_min": Param("int", 4, "smallest N in the tau(N) sweep"),
                "sweep_n_max": Param("int", 20, "largest N in the tau(N) sweep"),
                "sweep_n_step": Param("int", 2, "N step of the sweep"),
            },
            run_quiescence,
        ),
        Scenario(
            "bloch",
            "damped non-Hermitian Bloch oscillations",
            {
                "n": Param("int", 6, "number of levels"),
                "c_over_delta": Param("float", 10.0, "level spacing C in units of Delta"),
                "delta": Param("float", 1.0, "single-level rate"),
                "t_max": Param("float", 5.0, "final time"),
                "n_times": Param("int", 501, "time samples"),
            },
            run_bloch,
        ),
        Scenario(
            "hofstadter",
            "exact strip dynamics vs the effective model",
            {
                **_LEVELS_4D,
                "phi": Param("float", HALF_PI, "flux per plaquette"),
                "kappa_lattice": Param("float", 1.0, "lattice hopping"),
                "excite": Param("int", 1, "initially excited level (1-based)"),
                "dt": Param("float", 0.0, "RK4 step (0: 0.05/(4 kappa + max kappa_a))"),
                "t_max": Param("float", 150.0, "final time"),
                "n_times": Param("int", 301, "time samples"),
            },
            run_hofstadter,
        ),
        Scenario(
            "floquet",
            "stroboscopic Floquet dynamics vs the effective model",
            {
                "omegas": Param("floats", [0.0, 0.0], "level frequencies"),
                "sites": Param("ints", [0, 2], "A-sublattice attachment sites"),
                "period": Param("float", 1.0, "modulation period T"),
                "t2_fraction": Param("float", 1.0 / 3.0, "T2 / T"),
                "rho_over_kappa": Param("float", 0.15, "level coupling rho in units of kappa"),
                "excite": Param("int", 1, "initially excited level (1-based)"),
                "n_cycles": Param("int", 60, "number of cycles"),
            },
            run_floquet,
        ),
        Scenario(
            "manybody",
            "fermion and boson non-decay probabilities",
            {
                "omegas": Param("floats", [0.0, 0.0, 0.0], "level frequencies"),
                "kappas": Param("floats", [0.2, 0.2, 0.2], "level couplings"),
                "sites": Param("ints", [1, 2, 3], "attachment sites"),
                "bath": Param("str", "linear", "bath", ("linear", "cosine")),
                "v": Param("float", 1.6, "group velocity of the linear bath"),
                "omega0": Param("float", 0.0, "linear bath frequency at k=0"),
                "kappa_hop": Param("float", 1.0, "cosine-band hopping"),
                "t_max": Param("float", 50.0, "final time"),
                "n_times": Param("int", 101, "time samples"),
            },
            run_manybody,
        ),
        Scenario(
            "verify-markov",
            "compare the closed-form decay matrix with direct quadrature",
            {
                **_LEVELS_4D,
                "v": Param("float", 1.6, "group velocity of the linear bath"),
                "omega0": Param("float", 0.0, "linear bath frequency at k=0"),
                "grid_points": Param("int", 4096, "quadrature grid (>= 1024)"),
                "t_max": Param("float", 150.0, "final time"),
                "n_times": Param("int", 301, "time samples"),
            },
            run_verify_markov,
        ),
    ]
}
