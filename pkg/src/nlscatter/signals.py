"""Polarization, emission line pairs and the pure time/frequency gated signals.

Emission is restricted to downward transitions (the lowering part of the
dipole coupling). For a transition from an upper state ``u`` to a lower
state ``l`` the emitted frequency is ``nu = eps_u - eps_l > 0`` and

* the coherent (pair-of-molecules) field is P''(t) = sum nu^2 mu_lu rho_ul e^{-i nu t},
* the incoherent field to final state ``l`` is T''_l(t) = sum_u nu^2 mu_lu psi_u e^{-i nu t}.

Every signal is a sum over pairs of lines (1, 2) of
``weight * kernel(nu1, nu2)`` where ``weight`` is the coefficient of
``exp(-i nu1 t1 + i nu2 t2)`` in the two-time field correlation
E(t1) E*(t2). The pure-gate limits, bare spectrograms and combined gates
(see ``gating``) differ only in the kernel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import DensityMatrix, LevelScheme, band_filter

A_TILDE2 = 1.0 / 3.0  # orientation-averaged normalization, A = 1
DEGENERATE_TOL = 1e-9  # Ha; lines closer than this share one lineshape bin


def rho_array(rho) -> np.ndarray:
    return rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def lorentzian(x, gamma):
    """Unit-area Lorentzian with half width at half maximum ``gamma``."""
    return (gamma / np.pi) / (np.asarray(x) ** 2 + gamma**2)


def coherent_prefactor(n_molecules: int) -> float:
    if n_molecules < 1:
        raise ValueError("N must be >= 1")
    return n_molecules * (n_molecules - 1) * A_TILDE2


def incoherent_prefactor(n_molecules: int) -> float:
    if n_molecules < 1:
        raise ValueError("N must be >= 1")
    return n_molecules * A_TILDE2


# ------------------------------------------------------------------ series

@dataclass(frozen=True, eq=False)
class TimeSeries:
    values: np.ndarray
    t0: float
    dt: float

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))


@dataclass(frozen=True, eq=False)
class FreqSeries:
    values: np.ndarray
    w0: float
    dw: float

    @property
    def w(self) -> np.ndarray:
        return self.w0 + self.dw * np.arange(len(self.values))


def nyquist_ok(dt: float, max_freq: float) -> bool:
    """Sampling criterion dt <= pi / (1.2 max|omega|)."""
    return max_freq == 0 or dt <= np.pi / (1.2 * abs(max_freq))


# ------------------------------------------------------------ polarization

def _polarization_terms(rho, scheme: LevelScheme, emission_only: bool):
    r = rho_array(rho)
    coef = r * scheme.dipoles.T  # rho_bc mu_cb
    w = scheme.omega  # omega_bc
    sel = coef != 0
    if emission_only:
        sel &= w > 0
    return coef[sel], w[sel]


def polarization(rho, scheme: LevelScheme, t, emission_only: bool = False):
    """P(t) = sum_bc rho_bc mu_cb exp(-i omega_bc t).

    With ``emission_only`` only the positive-frequency (emitting) part is kept.
    """
    coef, w = _polarization_terms(rho, scheme, emission_only)
    t = np.asarray(t, dtype=float)
    return np.exp(-1j * np.multiply.outer(t, w)) @ coef


def polarization_ddot(rho, scheme: LevelScheme, t, emission_only: bool = False):
    """sum_bc rho_bc omega_bc^2 mu_cb exp(-i omega_bc t).

    This is minus the second time derivative of ``polarization``; only its
    modulus enters any signal.
    """
    coef, w = _polarization_terms(rho, scheme, emission_only)
    t = np.asarray(t, dtype=float)
    return np.exp(-1j * np.multiply.outer(t, w)) @ (coef * w**2)


# ------------------------------------------------------------------ lines

@dataclass(frozen=True, eq=False)
class LineSet:
    """Pairs of emission lines and their correlation weights.

    ``first``/``second`` hold (lower, upper) state indices of each line;
    ``weight`` includes the nu1^2 nu2^2 prefactor (``prefactor`` keeps it
    separately for inspection).
    """

    first: np.ndarray
    second: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray
    weight: np.ndarray
    prefactor: np.ndarray
    channel: str
    n_molecules: int

    def __len__(self):
        return self.nu1.size

    @property
    def scale(self) -> float:
        if self.channel == "coherent":
            return coherent_prefactor(self.n_molecules)
        return incoherent_prefactor(self.n_molecules)

    def terms(self) -> set:
        """Set of ((l1, u1), (l2, u2)) index pairs carried by the set."""
        return {
            (tuple(map(int, a)), tuple(map(int, b))) for a, b in zip(self.first, self.second)
        }

    def restrict(self, keep) -> "LineSet":
        return LineSet(
            self.first[keep], self.second[keep], self.nu1[keep], self.nu2[keep],
            self.weight[keep], self.prefactor[keep], self.channel, self.n_molecules,
        )


def _transition_mask(scheme: LevelScheme, transitions):
    """mask[u, l] true when (band[l], band[u]) is an allowed (lower, upper) pair."""
    if transitions is None:
        return np.ones((scheme.n, scheme.n), dtype=bool)
    tags = np.array(scheme.band)
    mask = np.zeros((scheme.n, scheme.n), dtype=bool)
    for lower, upper in transitions:
        mask |= (tags[:, None] == upper) & (tags[None, :] == lower)
    return mask


def coherent_amplitudes(rho, scheme: LevelScheme, transitions=None):
    """Emission lines of the polarization: (lower, upper), nu, nu^2 mu rho."""
    r = rho_array(rho)
    w = scheme.omega
    amp = scheme.dipoles.T * r  # [u, l] -> mu_lu rho_ul
    sel = (w > 0) & (amp != 0) & _transition_mask(scheme, transitions)
    u, l = np.nonzero(sel)
    nu = w[u, l]
    return np.stack([l, u], axis=1), nu, nu**2 * amp[u, l]


def line_pairs(rho, scheme: LevelScheme, channel: str, n_molecules: int = 1,
               max_split: float | None = None, transitions=None) -> LineSet:
    """Enumerate the line pairs of the coherent or incoherent channel.

    ``max_split`` drops pairs with |nu1 - nu2| above it; ``transitions`` keeps
    only lines whose (lower band, upper band) tags are listed, e.g. {("e", "e")}.
    """
    r = rho_array(rho)
    allowed = _transition_mask(scheme, transitions)
    if channel == "coherent":
        idx, nu, amp = coherent_amplitudes(r, scheme, transitions)
        i, j = np.meshgrid(np.arange(nu.size), np.arange(nu.size), indexing="ij")
        i, j = i.ravel(), j.ravel()
        first, second = idx[i], idx[j]
        nu1, nu2 = nu[i], nu[j]
        weight = amp[i] * amp[j].conj()
    elif channel == "incoherent":
        w = scheme.omega
        mu = scheme.dipoles
        firsts, seconds, n1, n2, wts = [], [], [], [], []
        for b in range(scheme.n):
            ups = np.flatnonzero((w[:, b] > 0) & (mu[b, :] != 0) & allowed[:, b])
            if ups.size == 0:
                continue
            sub = r[np.ix_(ups, ups)]
            c, c2 = np.nonzero(sub != 0)
            if c.size == 0:
                continue
            nu_c, nu_c2 = w[ups[c], b], w[ups[c2], b]
            wts.append(nu_c**2 * nu_c2**2 * mu[b, ups[c]] * mu[b, ups[c2]].conj() * sub[c, c2])
            firsts.append(np.stack([np.full(c.size, b), ups[c]], axis=1))
            seconds.append(np.stack([np.full(c.size, b), ups[c2]], axis=1))
            n1.append(nu_c)
            n2.append(nu_c2)
        if wts:
            first, second = np.concatenate(firsts), np.concatenate(seconds)
            nu1, nu2, weight = map(np.concatenate, (n1, n2, wts))
        else:
            first = second = np.zeros((0, 2), dtype=int)
            nu1 = nu2 = np.zeros(0)
            weight = np.zeros(0, dtype=complex)
    else:
        raise ValueError(f"unknown channel {channel!r}")
    lines = LineSet(first, second, nu1, nu2, weight, nu1**2 * nu2**2, channel, n_molecules)
    if max_split is not None:
        lines = lines.restrict(np.abs(nu1 - nu2) <= max_split)
    return lines


def evaluate_pairs(lines: LineSet, kernel) -> np.ndarray:
    """Scaled sum over pairs of weight * kernel(nu1, nu2); kernel returns (..., pairs)."""
    if len(lines) == 0:
        return 0.0
    return lines.scale * (kernel(lines.nu1, lines.nu2) @ lines.weight)


# ---------------------------------------------------------- pure-gate limits

def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError("line broadening gamma must be positive")


def _degenerate(lines: LineSet) -> LineSet:
    return lines.restrict(np.abs(lines.nu1 - lines.nu2) <= DEGENERATE_TOL)


def s_coh_time(rho, scheme: LevelScheme, n_molecules: int, t):
    """N(N-1) (A~^2/2) |P''(t)|^2 for the emitting part of the polarization."""
    pref = coherent_prefactor(n_molecules)
    p = polarization_ddot(rho, scheme, t, emission_only=True)
    return 0.5 * pref * np.abs(p) ** 2


def s_coh_freq(rho, scheme: LevelScheme, n_molecules: int, w, gamma, transitions=None):
    """N(N-1) A~^2 sum nu^4 |mu|^2 |rho|^2 L_gamma(w - nu)."""
    _check_gamma(gamma)
    pref = coherent_prefactor(n_molecules)
    w = np.asarray(w, dtype=float)
    _, nu, amp = coherent_amplitudes(rho, scheme, transitions)
    if nu.size == 0:
        return np.zeros_like(w)
    # amplitudes of degenerate lines add before squaring
    order = np.argsort(nu, kind="stable")
    nu, amp = nu[order], amp[order]
    start = np.flatnonzero(np.r_[True, np.diff(nu) > DEGENERATE_TOL])
    bins = np.add.reduceat(amp, start)
    return pref * (lorentzian(np.subtract.outer(w, nu[start]), gamma) @ np.abs(bins) ** 2)


def s_inc_time(rho, scheme: LevelScheme, n_molecules: int, t):
    """(N A~^2 / 2) sum_b sum_cc' nu^2 nu'^2 mu_bc mu*_bc' rho_cc' e^{i(nu'-nu)t}.

    Evaluated as sum_k p_k sum_b |T''_b(t; v_k)|^2 over the eigenvectors of rho,
    which is exact for any Hermitian rho.
    """
    r = rho_array(rho)
    t = np.asarray(t, dtype=float)
    pref = 0.5 * incoherent_prefactor(n_molecules)
    p, v = np.linalg.eigh(r)
    keep = p != 0
    p, v = p[keep], v[:, keep]
    out = np.zeros(t.shape)
    w = scheme.omega
    for b in range(scheme.n):
        ups = np.flatnonzero((w[:, b] > 0) & (scheme.dipoles[b, :] != 0))
        if ups.size == 0:
            continue
        nu = w[ups, b]
        coef = (nu**2 * scheme.dipoles[b, ups])[:, None] * v[ups, :]  # (ups, k)
        amp = np.exp(-1j * np.multiply.outer(t, nu)) @ coef  # (..., k)
        out += np.abs(amp) ** 2 @ p
    return pref * out


def s_inc_freq(rho, scheme: LevelScheme, n_molecules: int, w, gamma, transitions=None):
    """N A~^2 sum nu^4 |mu|^2 rho_cc L_gamma(w - nu); only populations (and
    coherences between exactly degenerate states) contribute."""
    _check_gamma(gamma)
    lines = _degenerate(line_pairs(rho, scheme, "incoherent", n_molecules,
                                   transitions=transitions))
    w = np.asarray(w, dtype=float)
    val = evaluate_pairs(lines, lambda a, b: lorentzian(np.subtract.outer(w, a), gamma))
    return np.real(val) + np.zeros_like(w)


# -------------------------------------------------------- bare spectrograms

def _bare(lines: LineSet, t, w, gamma):
    t, w = np.broadcast_arrays(np.asarray(t, float), np.asarray(w, float))

    def kernel(a, b):
        phase = np.exp(1j * np.multiply.outer(t, b - a))
        return phase / (gamma + 1j * np.subtract.outer(w, 0.5 * (a + b)))

    return evaluate_pairs(lines, kernel) + np.zeros(t.shape, dtype=complex)


def bare_coh_spectrogram(rho, scheme: LevelScheme, n_molecules: int, t, w, gamma):
    """N(N-1) A~^2 int_0^inf dtau e^{-i w tau - gamma tau} P''(t - tau/2) P''*(t + tau/2).

    Closed form: sum_pairs weight e^{i(nu2-nu1)t} / (gamma + i(w - (nu1+nu2)/2));
    its real part is pi times a Lorentzian of HWHM gamma.
    """
    _check_gamma(gamma)
    return _bare(line_pairs(rho, scheme, "coherent", n_molecules), t, w, gamma)


def bare_inc_spectrogram(rho, scheme: LevelScheme, n_molecules: int, t, w, gamma):
    """Single-molecule analogue of ``bare_coh_spectrogram`` built from transition
    amplitudes; prefactor N A~^2."""
    _check_gamma(gamma)
    return _bare(line_pairs(rho, scheme, "incoherent", n_molecules), t, w, gamma)


# --------------------------------------------------------------- two bands

TWO_BAND_MASKS = {
    "coherent": {("g", "e"), ("e", "g")},
    "incoherent": {("e", "e")},
}


def two_band_rho(rho, scheme: LevelScheme, channel: str) -> np.ndarray:
    """rho restricted to the elements that enter the two-band model of ``channel``."""
    r = rho_array(rho)
    mask = band_filter(r, scheme, TWO_BAND_MASKS[channel])
    return np.where(mask, r, 0)


def two_band_signals(rho, scheme: LevelScheme, n_molecules: int, limit: str, axis,
                     gamma: float | None = None):
    """Two-band (ground/excited, interband dipoles only) limits of the four signals.

    ``limit`` is one of 'coh-time', 'coh-freq', 'inc-time', 'inc-freq'.
    """
    if scheme.has_intraband_dipoles():
        warnings.warn("scheme has intraband dipoles; two-band model assumption violated",
                      stacklevel=2)
    funcs = {
        "coh-time": ("coherent", s_coh_time),
        "coh-freq": ("coherent", s_coh_freq),
        "inc-time": ("incoherent", s_inc_time),
        "inc-freq": ("incoherent", s_inc_freq),
    }
    if limit not in funcs:
        raise ValueError(f"unknown limit {limit!r}")
    channel, fn = funcs[limit]
    masked = two_band_rho(rho, scheme, channel)
    if limit.endswith("freq"):
        return fn(masked, scheme, n_molecules, axis, gamma)
    return fn(masked, scheme, n_molecules, axis)
