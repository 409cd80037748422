import warnings

import hypothesis
import numpy as np
import pytest

from nlscatter.gating import beat_contrast, gated_spectrogram, time_marginal
from nlscatter.model import DensityMatrix, LevelScheme, PreparedState, rho_from_kappa
from nlscatter.units import UNITS

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.load_profile("default")

_ACCEPTANCE = []


def random_scheme(n=5, seed=0, bands=None, e_max=0.5):
    """n states, ground at 0, random complex dipoles between every pair."""
    rng = np.random.default_rng(seed)
    e = np.r_[0.0, np.sort(rng.uniform(0.1, e_max, n - 1))]
    mu = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    mu = np.triu(mu, 1)
    mu = mu + mu.conj().T
    bands = bands or ("g",) + ("e",) * (n - 1)
    return LevelScheme(e, bands, mu, tuple(f"s{i}" for i in range(n)))


def random_rho(n=5, seed=0, rank=None):
    rng = np.random.default_rng(seed + 1000)
    rank = n if rank is None else rank
    a = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    r = a @ a.conj().T
    return DensityMatrix(r / np.trace(r).real)


def two_level(omega=0.25, mu=1.0):
    return LevelScheme(np.array([0.0, omega]), ("g", "e"),
                       np.array([[0, mu], [mu, 0]], dtype=complex), ("g", "e"))


def two_level_rho(rho_ge=0.1, rho_ee=0.0):
    return np.array([[1 - rho_ee, rho_ge], [np.conj(rho_ge), rho_ee]], dtype=complex)


def lambda_scheme():
    """One excited state above two ground-band states, interband dipoles only."""
    e = UNITS.ev_to_ha(np.array([0.0, 0.2, 6.0]))
    mu = np.zeros((3, 3), complex)
    mu[0, 2] = mu[2, 0] = 1.0
    mu[1, 2] = mu[2, 1] = 0.7
    return LevelScheme(e, ("g", "g", "e"), mu, ("g0", "g1", "e"))


def v_scheme():
    """One ground state below two excited states, interband dipoles only."""
    e = UNITS.ev_to_ha(np.array([0.0, 6.0, 6.2]))
    mu = np.zeros((3, 3), complex)
    mu[0, 1] = mu[1, 0] = 1.0
    mu[0, 2] = mu[2, 0] = 0.7
    return LevelScheme(e, ("g", "e", "e"), mu, ("g", "e1", "e2"))


def v_pair(split, center=0.25, gamma_mu=(1.0, 0.8)):
    """Ground plus two excited states split by ``split`` Ha, equal coherent weights."""
    e = np.array([0.0, center - split / 2, center + split / 2])
    mu = np.zeros((3, 3), complex)
    mu[0, 1:] = gamma_mu
    mu = mu + mu.conj().T
    s = LevelScheme(e, ("g", "e", "e"), mu)
    k = np.array([0.9, 0.3, 0.3])
    return s, rho_from_kappa(PreparedState(k / np.linalg.norm(k)))


def contrast_at_peak(s, rho, gate, split):
    t = np.linspace(0, 2 * np.pi / split, 257)
    w = np.linspace(s.energies[1] - 0.01, s.energies[2] + 0.01, 801)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spec = gated_spectrogram(rho, s, 1, "incoherent", gate, t, w)
    j = np.argmax(time_marginal(spec))
    return beat_contrast(spec.values[:, j])


@pytest.fixture
def acceptance():
    """Record one line per acceptance criterion for the terminal summary."""

    def record(name, passed, detail=""):
        _ACCEPTANCE.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
