import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiral_decay import numerics
from chiral_decay.errors import (
    DuplicateSite,
    MultipleRoots,
    OutOfBand,
    PhysicsPreconditionError,
    QuadratureDivergence,
)
from chiral_decay.model import (
    ChiralLinear,
    CosineBand,
    FloquetSawtooth,
    LevelChain,
    TabulatedChiral,
    bidirectional_band_center,
    build_bidirectional,
    build_unidirectional,
    delta_numeric,
    find_bound_states,
    make_chain,
    solve_resonance,
    wrap_k,
)


@st.composite
def chiral_chains(draw, n_max=8, v_range=(0.5, 3.0)):
    n = draw(st.integers(1, n_max))
    v = draw(st.floats(*v_range))
    sites = draw(st.lists(st.integers(-30, 30), min_size=n, max_size=n, unique=True))
    omegas = draw(st.lists(st.floats(-0.9 * math.pi * v, 0.9 * math.pi * v), min_size=n, max_size=n))
    kappas = draw(st.lists(st.floats(0.01, 0.5), min_size=n, max_size=n))
    return LevelChain.from_arrays(omegas, kappas, sites), ChiralLinear(v=v)


# --- chains and dispersions -------------------------------------------------


def test_chain_validation():
    with pytest.raises(DuplicateSite):
        LevelChain.from_arrays([0, 0], [0.1, 0.1], [2, 2])
    with pytest.raises(ValueError):
        LevelChain.from_arrays([0], [-0.1], [0])
    with pytest.raises(ValueError):
        LevelChain(())
    ch = make_chain([(0.5, 0.1, 3), (0.0, 0.2, -1)])
    srt, order = ch.sorted_by_site()
    assert list(srt.sites) == [-1, 3] and order == (1, 0)


def test_cosine_band_is_even():
    band = CosineBand(1.3)
    k = np.random.default_rng(1).uniform(-10, 10, 1000)
    assert np.all(band.omega(-k) - band.omega(k) == 0)


def test_tabulated_branch_validation():
    k = np.linspace(-1, 1, 20)
    with pytest.raises(ValueError):
        TabulatedChiral(k[:10], k[:10])
    with pytest.raises(ValueError):
        TabulatedChiral(k, -k)
    tab = TabulatedChiral(k, 2 * k + 0.1 * k**3)
    np.testing.assert_allclose(tab.velocity(0.3), 2 + 0.3 * 0.09, rtol=1e-3)  # coarse table


# --- resonance ---------------------------------------------------------------


def test_resonance_linear_origin():
    r = solve_resonance(ChiralLinear(v=1.0), 0.0)
    assert r.k_beta == pytest.approx(0.0, abs=1e-12) and r.v_beta == 1.0


def test_resonance_floquet_band_edge():
    r = solve_resonance(FloquetSawtooth(1.0), 0.0)
    assert r.k_beta == pytest.approx(-math.pi, abs=1e-12)
    assert r.v_beta == 1.0


def test_resonance_floquet_is_periodic_in_quasi_energy():
    disp = FloquetSawtooth(2.0)
    a = solve_resonance(disp, 0.4)
    b = solve_resonance(disp, 0.4 + 2 * math.pi / 2.0)
    assert a.k_beta == pytest.approx(b.k_beta, abs=1e-10)


@given(st.floats(0.2, 5.0), st.floats(-3, 3), st.floats(-0.99, 0.99))
def test_resonance_residual(v, w0, frac):
    disp = ChiralLinear(v=v, omega0=w0)
    target = w0 + frac * math.pi * v
    r = solve_resonance(disp, target)
    assert abs(disp.omega(r.k_beta) - target) <= 1e-10
    assert -math.pi <= r.k_beta < math.pi


def test_resonance_errors():
    with pytest.raises(OutOfBand):
        solve_resonance(ChiralLinear(v=1.0), 4.0)
    with pytest.raises(MultipleRoots):
        solve_resonance(CosineBand(1.0), 0.3)
    with pytest.raises(OutOfBand):
        solve_resonance(CosineBand(1.0), 2.5)


def test_wrap_k():
    assert wrap_k(math.pi) == pytest.approx(-math.pi)
    assert wrap_k(2.536 + 4 * math.pi) == pytest.approx(2.536)


# --- unidirectional build ------------------------------------------------------


def test_single_level_rate():
    H = build_unidirectional(LevelChain.from_arrays([0.0], [0.2], [0]), ChiralLinear(v=1.6, omega0=-3.0))
    assert H.entries[0, 0] == pytest.approx(-0.0125j, abs=1e-16)


def test_two_level_hall_edge_parameters():
    # Linear branch placed so that omega = -1.5 resonates at k = 2.536 with v = 1.6.
    disp = ChiralLinear(v=1.6, omega0=-1.5 - 1.6 * 2.536)
    H = build_unidirectional(LevelChain.from_arrays([-1.5, -1.5], [0.2, 0.2], [0, 3]), disp).entries
    assert H[0, 0] == pytest.approx(-1.5 - 0.0125j)
    assert H[1, 1] == pytest.approx(-1.5 - 0.0125j)
    assert H[0, 1] == 0
    assert H[1, 0] == pytest.approx(-0.025j * np.exp(1j * 7.608), rel=1e-12)


def test_decoupled_levels_are_real():
    H = build_unidirectional(LevelChain.from_arrays([0.1, -0.3], [0, 0], [0, 1]), ChiralLinear(v=1.0))
    assert np.array_equal(H.entries, np.diag([0.1, -0.3]).astype(complex))
    assert H.resonance_meta == (None, None)


def test_caller_order_roundtrip():
    chain = LevelChain.from_arrays([0.0, 0.1, 0.2], [0.1, 0.2, 0.3], [5, -2, 1])
    H = build_unidirectional(chain, ChiralLinear(v=1.0))
    assert list(H.chain.sites) == [-2, 1, 5]
    v = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(H.to_caller_order(H.from_caller_order(v)), v)
    np.testing.assert_array_equal(H.from_caller_order(v), [2.0, 3.0, 1.0])


def test_unidirectional_needs_chiral_band():
    with pytest.raises(PhysicsPreconditionError):
        build_unidirectional(LevelChain.from_arrays([0.0], [0.1], [0]), CosineBand(1.0))


@pytest.mark.filterwarnings("ignore::chiral_decay.errors.IllConditionedWarning")
@given(chiral_chains())
def test_unidirectional_is_lower_triangular(args):
    chain, disp = args
    H = build_unidirectional(chain, disp)
    assert np.all(np.triu(H.entries, 1) == 0)
    v = disp.v
    expect = H.chain.omegas - 1j * H.chain.kappas**2 / (2 * v)
    np.testing.assert_allclose(np.diag(H.entries), expect, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(numerics.eigvals(H.entries), np.diag(H.entries))
    assert np.all(np.diag(H.entries).imag < 0)
    assert find_bound_states(H, 1e-9) == []


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_degenerate_chain_is_exceptional_point(n):
    H = build_unidirectional(LevelChain.degenerate(n, 0.0, 0.3), ChiralLinear(v=1.0)).entries
    lam = np.diag(H)
    assert np.all(lam == lam[0])
    s = np.linalg.svd(H - lam[0] * np.eye(n), compute_uv=False)
    assert int(np.sum(s > 1e-8)) == n - 1


# --- bidirectional build -----------------------------------------------------------


def test_bidirectional_even_pair_band_centre():
    kc, k = 0.3, 1.0
    H = build_bidirectional(LevelChain.from_arrays([0, 0], [kc, kc], [0, 2]), k).entries
    np.testing.assert_allclose(H, -(1j * kc**2 / (2 * k)) * np.array([[1, -1], [-1, 1]]), atol=1e-16)
    w = np.sort_complex(numerics.eigvals(H))
    np.testing.assert_allclose(w, [-1j * kc**2 / k, 0], atol=1e-15)


def test_bidirectional_single_level():
    H = build_bidirectional(LevelChain.from_arrays([0.0], [0.4], [3]), 2.0).entries
    assert H[0, 0] == pytest.approx(-1j * 0.16 / 4.0)


def test_bidirectional_odd_pair_decays():
    k1, k2 = 0.2, 0.35
    H = build_bidirectional(LevelChain.from_arrays([0, 0], [k1, k2], [0, 1]), 1.0).entries
    assert H[0, 1] == pytest.approx(k1 * k2 / 2.0)
    assert np.all(np.linalg.eigvals(H).imag < 0)


@given(
    st.lists(st.floats(0.01, 0.5), min_size=1, max_size=6),
    st.floats(0.5, 3.0),
)
def test_bidirectional_band_centre_form(kappas, hop):
    n = len(kappas)
    sites = [3 * i + (i % 2) for i in range(n)]
    chain = LevelChain.from_arrays([0.0] * n, kappas, sites)
    H = build_bidirectional(chain, hop)
    B = np.diag(np.zeros(n)) + bidirectional_band_center(chain, hop)
    np.testing.assert_allclose(H.entries, B, rtol=0, atol=1e-15 * max(kappas) ** 2 / hop + 1e-17)
    np.testing.assert_allclose(H.entries, H.entries.T, atol=1e-16)


@given(st.floats(-1.9, 1.9), st.integers(0, 9))
def test_bidirectional_matches_green_function(w, d):
    # Independent oracle: lattice Green's function of the cosine wire at w + i0.
    hop = 1.0
    q = math.acos(-w / (2 * hop))  # exp(iq) on the upper branch
    g = -1j * np.exp(1j * q * d) / (2 * hop * math.sin(q))
    H = build_bidirectional(LevelChain.from_arrays([w, w], [0.2, 0.3], [0, d]) if d else
                            LevelChain.from_arrays([w], [0.2], [0]), hop).entries
    assert H[-1, 0] - (w if d == 0 else 0) == pytest.approx(0.2 * (0.3 if d else 0.2) * g, rel=1e-9, abs=1e-14)


def test_bidirectional_out_of_band():
    with pytest.raises(OutOfBand):
        build_bidirectional(LevelChain.from_arrays([2.0], [0.1], [0]), 1.0)


@pytest.mark.parametrize("sep,count", [(2, 1), (4, 1), (1, 0), (3, 0)])
def test_bound_state_parity(sep, count):
    H = build_bidirectional(LevelChain.from_arrays([0, 0], [0.2, 0.2], [0, sep]), 1.0)
    tol = 1e-12 if count else 1e-9
    assert len(find_bound_states(H, tol)) == count


# --- Markov quadrature ---------------------------------------------------------------


def test_delta_numeric_matches_closed_form_rows():
    chain = LevelChain.from_arrays([-1.5, -1.5, -1.2], [0.2, 0.25, 0.15], [0, 3, 7])
    disp = ChiralLinear(v=1.6)
    D = delta_numeric(chain, disp)
    closed = build_unidirectional(chain, disp).decay_matrix()
    kk = np.outer(chain.kappas, chain.kappas) / 1.6
    # diagonal: kappa^2 / (2 v), no imaginary part
    np.testing.assert_allclose(np.diag(D), chain.kappas**2 / 3.2, rtol=1e-10, atol=1e-15)
    # downstream entries within 1 %, upstream entries vanish
    low = np.tril_indices(3, -1)
    assert np.max(np.abs(D[low] - closed[low]) / kk[low]) < 1e-2
    up = np.triu_indices(3, 1)
    assert np.max(np.abs(D[up]) / kk[up]) < 1e-2


def test_delta_numeric_unfolded_band_is_close():
    chain = LevelChain.from_arrays([0.0, 0.3], [0.1, 0.1], [0, 4])
    disp = ChiralLinear(v=2.0)
    D = delta_numeric(chain, disp, periodize=False)
    closed = build_unidirectional(chain, disp).decay_matrix()
    assert np.max(np.abs(D - closed)) / np.max(np.abs(closed)) < 0.1


def test_delta_numeric_checks():
    chain = LevelChain.from_arrays([0.0], [0.1], [0])
    with pytest.raises(ValueError):
        delta_numeric(chain, ChiralLinear(v=1.0), grid_points=512)
    with pytest.raises(QuadratureDivergence):
        delta_numeric(LevelChain.from_arrays([0.0, 0.0], [0.1, 0.1], [0, 1500]), ChiralLinear(v=1.0), grid_points=1024)
