import ast
import inspect

import numpy as np
import pytest

from conftest import random_rho, random_scheme, two_level, two_level_rho, v_scheme
from nlscatter import oracles
from nlscatter.gating import GateSpec, gated_spectrogram
from nlscatter.model import LevelScheme
from nlscatter.oracles import (
    QuadratureError,
    brute_force_gated,
    brute_force_gated_grid,
    classical_larmor,
    larmor_prefactor,
    sample_polarization,
    wave_equation_field,
)
from nlscatter.signals import TimeSeries, s_coh_time, s_inc_freq
from nlscatter.units import C_AU


def larmor_ratio(rho, scheme, t0=0.0, dt=0.05, n=400):
    _, pddot = sample_polarization(rho, scheme, t0, dt, n)
    larmor = classical_larmor(pddot, 1.0).values
    coh = s_coh_time(rho, scheme, 2, pddot.t)
    return larmor / coh


def periodic_scheme(n=5, seed=0, period=200.0, harmonics=(3, 7, 11, 13)):
    """States whose transition frequencies are all multiples of 2 pi / period."""
    s = random_scheme(n, seed)
    e = np.r_[0.0, 2 * np.pi / period * np.asarray(harmonics[: n - 1], dtype=float)]
    return LevelScheme(e, s.band, s.dipoles, s.labels)


# --------------------------------------------------------------- larmor

@pytest.mark.parametrize("seed", range(4))
def test_larmor_ratio_constant_random(seed):
    ratio = larmor_ratio(random_rho(5, seed), random_scheme(5, seed))
    assert np.ptp(ratio) / np.mean(ratio) < 1e-10


def test_larmor_ratio_value_two_level():
    # s_coh_time(N=2) = 2 A~^2 / 2 |P''|^2 with A~^2 = 1/3
    ratio = larmor_ratio(two_level_rho(0.1), two_level())
    np.testing.assert_allclose(ratio, 3.0, rtol=1e-12)


def test_larmor_zero_input():
    out = classical_larmor(TimeSeries(np.zeros(16), 0.0, 0.1), 2.0)
    assert np.all(out.values == 0)


def test_larmor_global_phase_invariant():
    s = random_scheme(4, 2)
    r = random_rho(4, 2).rho
    # one common phase on every rho_ul (u > l), conjugate on rho_lu
    lower = np.tril(np.ones_like(r), -1)
    r2 = np.diag(np.diag(r)) + np.exp(0.7j) * lower * r + np.exp(-0.7j) * lower.T * r
    _, a = sample_polarization(r, s, 0.0, 0.1, 64)
    _, b = sample_polarization(r2, s, 0.0, 0.1, 64)
    np.testing.assert_allclose(classical_larmor(b, 1.0).values, classical_larmor(a, 1.0).values,
                               rtol=1e-12)


def test_larmor_undersampled_rejected():
    with pytest.raises(ValueError, match="undersampled"):
        classical_larmor(TimeSeries(np.zeros(8), 0.0, 10.0), 1.0, max_freq=1.0)


# ---------------------------------------------------------- wave equation

def test_wave_field_inverse_distance():
    p = TimeSeries(np.cos(2 * np.pi * 3 * np.arange(128) / 128), 0.0, 0.5)
    a = wave_equation_field(p, 1e3)
    b = wave_equation_field(p, 2e3)
    np.testing.assert_array_equal(b.values * 2, a.values)
    assert b.t0 - a.t0 == pytest.approx(1e3 / C_AU, rel=1e-14)


def test_wave_field_scales_with_frequency_squared():
    n, dt = 256, 0.5
    amps = []
    for k in (2, 4, 8):
        w0 = 2 * np.pi * k / (n * dt)
        e = wave_equation_field(TimeSeries(np.cos(w0 * dt * np.arange(n)), 0.0, dt), 1.0)
        amps.append(np.max(np.abs(e.values)) * C_AU**2 / w0**2)
    np.testing.assert_allclose(amps, 1.0, rtol=1e-10)


def test_wave_field_rejects_nonpositive_distance():
    p = TimeSeries(np.zeros(8), 0.0, 1.0)
    for r in (0.0, -1.0):
        with pytest.raises(ValueError):
            wave_equation_field(p, r)


@pytest.mark.parametrize("seed", range(3))
def test_wave_field_matches_larmor(seed):
    period, n = 200.0, 2048
    s = periodic_scheme(5, seed, period)
    p, pddot = sample_polarization(random_rho(5, seed), s, 0.0, period / n, n)
    r = 5e3
    field = wave_equation_field(p, r)
    larmor = classical_larmor(pddot, larmor_prefactor(r))
    np.testing.assert_allclose(np.abs(field.values) ** 2, larmor.values,
                               rtol=1e-8, atol=1e-8 * larmor.values.max())


# ---------------------------------------------------------- brute force

def test_pure_frequency_two_level_matches_analytic():
    g = GateSpec("frequency", gamma=0.004)
    rho = two_level_rho(0.1, 0.05)
    w = np.linspace(0.23, 0.27, 9)
    ref = s_inc_freq(rho, two_level(), 3, w, 0.004)
    out = brute_force_gated_grid(rho, two_level(), 3, "incoherent", g, [0.0], w)[0]
    np.testing.assert_allclose(out, ref, rtol=1e-6)


def test_diagonal_rho_coherent_zero():
    s = random_scheme(4, 1)
    rho = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
    g = GateSpec("combined", sigma_T=200.0, sigma_w=0.01, gamma=0.004)
    assert brute_force_gated(rho, s, 2, "coherent", g, 10.0, 0.2) == 0.0


@pytest.mark.filterwarnings("ignore:frequency grid is coarser")
def test_v_pair_combined_gate_matches_kernel_path():
    s = v_scheme()
    rho = np.array([[0.9, 0.1, 0.08], [0.1, 0.06, 0.03], [0.08, 0.03, 0.04]], dtype=complex)
    g = GateSpec("combined", sigma_T=300.0, sigma_w=0.005, gamma=0.002)
    tb = np.array([0.0, 150.0, 400.0])
    wb = s.energies[1:3].mean() + np.array([-0.004, 0.0, 0.006])
    for ch in ("coherent", "incoherent"):
        ref = brute_force_gated_grid(rho, s, 2, ch, g, tb, wb)
        out = gated_spectrogram(rho, s, 2, ch, g, tb, wb).values
        np.testing.assert_allclose(out, ref, rtol=1e-4, atol=1e-6 * np.abs(ref).max())


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_independent_methods_agree_without_identity():
    s, rho = random_scheme(5, 3), random_rho(5, 3)
    g = GateSpec("combined", sigma_T=150.0, sigma_w=0.02, gamma=0.005)
    tb = np.linspace(0, 300, 4)
    wb = np.linspace(0.15, 0.45, 4)
    ref = brute_force_gated_grid(rho, s, 2, "incoherent", g, tb, wb)
    out = gated_spectrogram(rho, s, 2, "incoherent", g, tb, wb).values
    err = np.abs(out - ref) / np.abs(ref).max()
    assert err.max() < 1e-4
    assert err.max() > 0  # different numerical methods, not a shared code path


def test_oracles_do_not_import_gating():
    tree = ast.parse(inspect.getsource(oracles))
    mods = {n.module for n in ast.walk(tree) if isinstance(n, ast.ImportFrom)}
    mods |= {a.name for n in ast.walk(tree) if isinstance(n, ast.Import) for a in n.names}
    assert not any(m and "gating" in m for m in mods)


def test_quadrature_failure_raises():
    with pytest.raises(QuadratureError):
        oracles._quad(lambda x: 1.0 / x, 0.0, 1.0)
