"""Property-based checks of the structural invariants across all modules."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_rho, random_scheme
from nlscatter.ensemble import sample_positions
from nlscatter.gating import GateSpec, gate_kernel, gated_spectrogram
from nlscatter.model import PreparedState, generate_synthetic_manifold, rho_from_kappa
from nlscatter.signals import (
    evaluate_pairs,
    line_pairs,
    s_coh_freq,
    s_coh_time,
    s_inc_freq,
    s_inc_time,
)

pytestmark = pytest.mark.filterwarnings("ignore:frequency grid is coarser",
                                        "ignore:time grid undersamples")

seeds = st.integers(0, 2**31 - 1)
sizes = st.integers(2, 6)
T = np.linspace(0, 400, 57)
W = np.linspace(0.0, 0.6, 121)
GAMMA = 0.005


def system(n, seed, rank=None):
    return random_scheme(n, seed), random_rho(n, seed, rank)


@st.composite
def gates(draw):
    sT = draw(st.floats(20.0, 2000.0))
    sw = draw(st.floats(1.0, 20.0)) / sT
    return GateSpec("combined", sigma_T=sT, sigma_w=sw, gamma=draw(st.floats(1e-3, 0.02)))


# ----------------------------------------------------------------- reality

@given(sizes, seeds, gates(), st.floats(0, 500), st.floats(0, 0.6))
def test_gated_pair_sum_is_real(n, seed, gate, tb, wb):
    s, r = system(n, seed)
    for ch in ("coherent", "incoherent"):
        lines = line_pairs(r, s, ch, 2)
        val = evaluate_pairs(lines, lambda a, b: gate_kernel(a, b, tb, wb, gate))
        assert abs(np.imag(val)) <= 1e-10 * max(abs(np.real(val)), 1e-300) + 1e-300


@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(-1e3, 1e3), st.floats(0, 1),
       gates())
def test_kernel_hermitian(w1, w2, tb, wb, gate):
    for g in (gate, GateSpec("frequency", gamma=gate.gamma), GateSpec("time")):
        a = gate_kernel(w1, w2, tb, None if g.mode == "time" else wb, g)
        b = gate_kernel(w2, w1, tb, None if g.mode == "time" else wb, g)
        assert np.allclose(a, np.conj(b), rtol=1e-14, atol=0)


# -------------------------------------------------------------- positivity

@given(sizes, seeds)
def test_pure_gate_signals_nonnegative(n, seed):
    s, r = system(n, seed)
    assert np.all(s_coh_time(r, s, 3, T) >= 0)
    assert np.all(s_coh_freq(r, s, 3, W, GAMMA) >= 0)
    assert np.all(s_inc_freq(r, s, 3, W, GAMMA) >= 0)
    inc = s_inc_time(r, s, 3, T)
    assert inc.min() >= -1e-10 * inc.max()


@given(sizes, seeds, gates())
def test_spectrogram_nonnegative(n, seed, gate):
    s, r = system(n, seed)
    for ch in ("coherent", "incoherent"):
        v = gated_spectrogram(r, s, 2, ch, gate, T[::8], W[::6]).values
        assert v.min() >= -1e-10 * max(v.max(), 1e-300)


# ---------------------------------------------------------- density matrix

@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=2, max_size=8).filter(lambda k: np.linalg.norm(k) > 1e-3))
def test_density_matrix_invariants(k):
    k = np.array(k) / np.linalg.norm(k)
    dm = rho_from_kappa(PreparedState(k))
    assert np.allclose(dm.rho, dm.rho.conj().T, atol=1e-14)
    assert abs(np.trace(dm.rho).real - 1) < 1e-12
    assert np.linalg.eigvalsh(dm.rho).min() > -1e-12
    assert abs(dm.purity - 1) < 1e-12


@given(sizes, seeds, st.integers(1, 6))
def test_mixed_states_valid(n, seed, rank):
    dm = random_rho(n, seed, min(rank, n))
    assert dm.purity <= 1 + 1e-12
    assert np.linalg.eigvalsh(dm.rho).min() > -1e-12


# ------------------------------------------------------------ energy shift

@given(sizes, seeds, st.floats(-50.0, 50.0), gates())
def test_global_energy_shift_invariance(n, seed, shift, gate):
    s, r = system(n, seed)
    sh = s.shifted(shift)
    pairs = [
        (s_coh_time(r, s, 2, T), s_coh_time(r, sh, 2, T)),
        (s_inc_time(r, s, 2, T), s_inc_time(r, sh, 2, T)),
        (s_coh_freq(r, s, 2, W, GAMMA), s_coh_freq(r, sh, 2, W, GAMMA)),
        (s_inc_freq(r, s, 2, W, GAMMA), s_inc_freq(r, sh, 2, W, GAMMA)),
        (gated_spectrogram(r, s, 2, "incoherent", gate, T[::8], W[::6]).values,
         gated_spectrogram(r, sh, 2, "incoherent", gate, T[::8], W[::6]).values),
    ]
    for a, b in pairs:
        np.testing.assert_allclose(b, a, rtol=1e-9, atol=1e-12 * np.abs(a).max())


# ------------------------------------------------------------- determinism

@given(st.integers(2, 30), seeds)
def test_manifold_seeded(n, seed):
    a = generate_synthetic_manifold(n, 5.75, 11.5, seed, intraband=True, n_core=2)
    b = generate_synthetic_manifold(n, 5.75, 11.5, seed, intraband=True, n_core=2)
    assert a.digest() == b.digest()


@given(st.sampled_from(["sphere", "slab"]), st.integers(1, 50), seeds)
def test_positions_seeded(shape, n, seed):
    a = sample_positions(shape, 10.0, n, seed)
    b = sample_positions(shape, 10.0, n, seed)
    np.testing.assert_array_equal(a.positions, b.positions)


@given(sizes, seeds, gates())
def test_spectrogram_threads_deterministic(n, seed, gate):
    s, r = system(n, seed)
    a = gated_spectrogram(r, s, 2, "coherent", gate, T[::4], W[::3], threads=1).values
    b = gated_spectrogram(r, s, 2, "coherent", gate, T[::4], W[::3], threads=3).values
    np.testing.assert_array_equal(a, b)
