"""Time-and-frequency gated detection with Gaussian gates.

The detector chain is: time gate F_t(t) = exp(-(t - tbar)^2 / 2 sigma_T^2) on
the emitted amplitude, then the frequency filter
F_f(w) = exp(-(w - wbar)^2 / 2 sigma_w^2), then |.|^2 integrated over
frequency. Each emission line carries a common phase diffusion so that its
two-time correlation decays as exp(-gamma |t1 - t2|) (Lorentzian line of
HWHM gamma). For a pair of lines (nu1, nu2) the chain integrates to

    K = exp(i (nu2 - nu1) tbar) exp(-(nu2 - nu1)^2 sigma_T^2 / 4)
        * Voigt(wbar - (nu1 + nu2)/2; sigma_G, gamma),
    sigma_G^2 = (sigma_w^2 + 1/sigma_T^2) / 2,

normalized to unit area in wbar for a degenerate pair. The pure frequency
gate (sigma_T -> inf, sigma_w -> 0) leaves a Lorentzian on degenerate pairs
only; the ideal time gate leaves exp(i (nu2 - nu1) tbar) / 2, matching the
prefactors of the time-gated signals.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import voigt_profile

from .signals import (
    DEGENERATE_TOL,
    LineSet,
    line_pairs,
    lorentzian,
    nyquist_ok,
    s_coh_freq,
    s_coh_time,
    s_inc_freq,
    s_inc_time,
)
from .units import UNITS

MODES = ("time", "frequency", "combined")
DEFAULT_GAMMA = UNITS.ev_to_ha(0.04)
# exp(-x^2/4) < 1e-16 beyond x = 12.2
_PAIR_CUTOFF = 12.2
_VISIBLE_SPLIT = 2 * np.sqrt(np.log(1e6))


@dataclass(frozen=True)
class GateSpec:
    """Detector gate. sigma_T in au, sigma_w and gamma in Ha."""

    mode: str = "combined"
    sigma_T: float | None = None
    sigma_w: float | None = None
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"gate mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "time":
            if self.sigma_w is not None:
                raise ValueError("pure-time gate cannot carry a frequency resolution sigma_w")
            return
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.mode == "combined":
            if self.sigma_T is None or self.sigma_w is None:
                raise ValueError("combined gate needs sigma_T and sigma_w")
            if not (self.sigma_T > 0 and self.sigma_w > 0):
                raise ValueError("gate widths must be positive")
            if self.sigma_T * self.sigma_w < 1 - 1e-12:
                raise ValueError(
                    f"sigma_T * sigma_w = {self.sigma_T * self.sigma_w:.4g} < 1 violates the "
                    "Fourier uncertainty bound; widen one of the gates"
                )

    @property
    def sigma_gauss(self) -> float:
        return float(np.sqrt((self.sigma_w**2 + 1.0 / self.sigma_T**2) / 2))


def gate_for_window(delta: float, gamma: float = DEFAULT_GAMMA) -> GateSpec:
    """Combined gate on the uncertainty bound (sigma_T sigma_w = 1) with window ``delta``."""
    return GateSpec("combined", sigma_T=2.0 / delta, sigma_w=delta / 2.0, gamma=gamma)


def interference_window(gate: GateSpec) -> float:
    """Largest level spacing whose beat survives the gate: sigma_w + 1/sigma_T (Ha)."""
    if gate.sigma_T is None or gate.sigma_w is None:
        raise ValueError("interference window needs both sigma_T and sigma_w")
    return gate.sigma_w + 1.0 / gate.sigma_T


def beat_period_to_splitting(period_fs):
    """|omega_ab| in eV for a beat period in fs."""
    period_au = UNITS.fs_to_au(np.asarray(period_fs, dtype=float))
    return UNITS.ha_to_ev(2 * np.pi / period_au)


def splitting_to_beat_period(splitting_ev):
    return UNITS.au_to_fs(2 * np.pi / UNITS.ev_to_ha(np.asarray(splitting_ev, dtype=float)))


def beat_contrast(trace) -> float:
    trace = np.asarray(trace, dtype=float)
    hi, lo = trace.max(), trace.min()
    return float((hi - lo) / (hi + lo)) if hi + lo > 0 else 0.0


def gate_kernel(w1, w2, tbar, wbar, gate: GateSpec):
    """Detector kernel K(w1, w2; tbar, wbar); all arguments broadcast.

    The gated signal is scale * sum_pairs weight * K(nu1, nu2).
    """
    w1, w2 = np.asarray(w1, float), np.asarray(w2, float)
    split = w2 - w1
    tbar = np.asarray(tbar, float)
    if gate.mode == "time":
        if wbar is not None:
            raise ValueError("pure-time gate has no frequency resolution; pass wbar=None")
        return 0.5 * np.exp(1j * split * tbar)
    mid = 0.5 * (w1 + w2)
    x = np.asarray(wbar, float) - mid
    if gate.mode == "frequency":
        same = np.abs(split) <= DEGENERATE_TOL
        return np.where(same, lorentzian(x, gate.gamma), 0.0) + 0j * tbar
    damp = np.exp(-(split * gate.sigma_T) ** 2 / 4)
    return np.exp(1j * split * tbar) * damp * voigt_profile(x, gate.sigma_gauss, gate.gamma)


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Gated signal on a (tbar, wbar) grid; axes held in au / Ha.

    For a pure-time gate ``w`` is None and ``values`` is one-dimensional.
    """

    t: np.ndarray
    w: np.ndarray | None
    values: np.ndarray
    gate: GateSpec
    channel: str
    scheme_hash: str = ""
    n_molecules: int = 1

    @property
    def t_fs(self):
        return UNITS.au_to_fs(self.t)

    @property
    def w_ev(self):
        return None if self.w is None else UNITS.ha_to_ev(self.w)

    @property
    def window(self):
        if self.gate.mode != "combined":
            return None
        return interference_window(self.gate)


def _combined_values(lines: LineSet, t, w, gate: GateSpec, threads: int, chunk: int = 2048):
    if len(lines) == 0:
        return np.zeros((t.size, w.size))
    split = lines.nu2 - lines.nu1
    amp = lines.weight * np.exp(-(split * gate.sigma_T) ** 2 / 4)
    mid = 0.5 * (lines.nu1 + lines.nu2)
    sig = gate.sigma_gauss

    def block(lo):
        sl = slice(lo, lo + chunk)
        phase = np.real(amp[sl][None, :] * np.exp(1j * np.outer(t, split[sl])))
        prof = voigt_profile(w[None, :] - mid[sl, None], sig, gate.gamma)
        return phase @ prof

    starts = range(0, len(lines), chunk)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(block, starts))
    else:
        parts = [block(lo) for lo in starts]
    total = np.zeros((t.size, w.size))
    for p in parts:  # fixed order keeps the reduction deterministic
        total += p
    return lines.scale * total


def gated_spectrogram(rho, scheme, n_molecules: int, channel: str, gate: GateSpec,
                      t, w=None, threads: int = 1) -> Spectrogram:
    """Gated signal S(tbar, wbar) for ``channel`` in {'coherent', 'incoherent'}.

    ``t`` in au, ``w`` in Ha.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    digest = scheme.digest()
    if gate.mode == "time":
        if w is not None:
            raise ValueError("pure-time gate has no frequency resolution; pass w=None")
        fn = s_coh_time if channel == "coherent" else s_inc_time
        if channel not in ("coherent", "incoherent"):
            raise ValueError(f"unknown channel {channel!r}")
        return Spectrogram(t, None, fn(rho, scheme, n_molecules, t), gate, channel, digest,
                           n_molecules)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.size > 1 and np.max(np.diff(w)) > gate.gamma:
        warnings.warn("frequency grid is coarser than gamma; lines will be under-resolved",
                      stacklevel=2)
    if gate.mode == "frequency":
        fn = {"coherent": s_coh_freq, "incoherent": s_inc_freq}[channel]
        spec = fn(rho, scheme, n_molecules, w, gate.gamma)
        values = np.broadcast_to(spec, (t.size, w.size)).copy()
        return Spectrogram(t, w, values, gate, channel, digest, n_molecules)
    lines = line_pairs(rho, scheme, channel, n_molecules,
                       max_split=_PAIR_CUTOFF / gate.sigma_T)
    lines = lines.restrict(lines.weight != 0)
    if t.size > 1 and len(lines):
        split = np.abs(lines.nu2 - lines.nu1)
        # beats damped below 1e-6 by the time gate are not visible
        beat = np.max(split[split * gate.sigma_T <= _VISIBLE_SPLIT], initial=0.0)
        if beat > 0 and not nyquist_ok(np.max(np.diff(t)), beat):
            warnings.warn("time grid undersamples the fastest surviving beat", stacklevel=2)
    values = _combined_values(lines, t, w, gate, threads)
    return Spectrogram(t, w, values, gate, channel, digest, n_molecules)


def default_grids(scheme, n_t: int = 512, n_w: int = 1024, t_max_fs: float = 300.0):
    """tbar in [0, 300] fs and wbar in [0, 1.2 max nu] (au / Ha)."""
    t = UNITS.fs_to_au(np.linspace(0.0, t_max_fs, n_t))
    emitting = scheme.omega[np.ix_(*(np.flatnonzero(np.array(scheme.band) != "f"),) * 2)]
    top = 1.2 * max(emitting.max(), 1e-6)
    return t, np.linspace(0.0, top, n_w)


def time_marginal(spec: Spectrogram) -> np.ndarray:
    """Average over the tbar grid; tends to the frequency-gated spectrum for long gates."""
    return spec.values.mean(axis=0)


def frequency_marginal(spec: Spectrogram) -> np.ndarray:
    """Trapezoid integral over wbar.

    For a degenerate pair the kernel has unit wbar-area, so for short time
    gates this tends to twice the pure-time signal (whose kernel is e^{i split t}/2).
    """
    return trapezoid(spec.values, spec.w, axis=1)
