"""Slow reference implementations used to cross-check the analytic paths.

Nothing here calls into ``gating``: the emitted-field correlation is rebuilt
from explicit state sums and the detector integrals are done by adaptive
Gauss-Kronrod quadrature (QUADPACK via scipy).
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate

from .signals import A_TILDE2, TimeSeries, nyquist_ok, polarization, polarization_ddot, rho_array
from .units import C_AU

TAU_SPAN = 40.0  # half-line truncation in units of 1/gamma


class QuadratureError(RuntimeError):
    pass


def _quad(f, a, b, epsabs=1e-13, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, limit=5000, epsabs=epsabs, epsrel=1e-11, **kw)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature did not converge: {exc}") from None
    if not np.isfinite(val):
        raise QuadratureError("quadrature returned a non-finite value")
    return val, err


def _field_terms(rho, scheme, channel):
    """(weight, nu1, nu2) of E(t1) E*(t2) = sum w exp(-i nu1 t1 + i nu2 t2), by explicit loops."""
    r = rho_array(rho)
    e, mu = scheme.energies, scheme.dipoles
    n = scheme.n
    terms = []
    if channel == "coherent":
        lines = []
        for u in range(n):
            for l in range(n):
                nu = e[u] - e[l]
                if nu > 0 and mu[l, u] * r[u, l] != 0:
                    lines.append((nu, nu**2 * mu[l, u] * r[u, l]))
        for nu1, a1 in lines:
            for nu2, a2 in lines:
                terms.append((a1 * np.conj(a2), nu1, nu2))
    elif channel == "incoherent":
        for b in range(n):
            for c in range(n):
                for c2 in range(n):
                    nu1, nu2 = e[c] - e[b], e[c2] - e[b]
                    if nu1 <= 0 or nu2 <= 0:
                        continue
                    w = nu1**2 * nu2**2 * mu[b, c] * np.conj(mu[b, c2]) * r[c, c2]
                    if w != 0:
                        terms.append((w, nu1, nu2))
    else:
        raise ValueError(f"unknown channel {channel!r}")
    return terms


def _scale(channel, n_molecules):
    return n_molecules * (n_molecules - 1) * A_TILDE2 if channel == "coherent" else n_molecules * A_TILDE2


class _GateChain:
    """Cached 1-d quadratures of the gated (t, tau) integral for one gate.

    For a term exp(-i nu1 t1 + i nu2 t2) the double integral factorizes into
    a t-integral (depends on the split and tbar) and a tau-integral (depends
    on wbar minus the mean frequency).
    """

    def __init__(self, gate):
        self.gate = gate
        self.beta = (gate.sigma_w**2 + 1 / gate.sigma_T**2) / 4
        self.tau_max = min(TAU_SPAN / gate.gamma, 12 / np.sqrt(self.beta))
        self._t, self._tau = {}, {}

    def time_part(self, split, tbar):
        key = (split, tbar)
        if key not in self._t:
            sT = self.gate.sigma_T
            env = lambda t: np.exp(-((t - tbar) ** 2) / sT**2)
            lo, hi = tbar - 10 * sT, tbar + 10 * sT
            tol = 1e-12 * sT  # integrand scale: the envelope integrates to sqrt(pi) sT
            re, _ = _quad(env, lo, hi, epsabs=tol, weight="cos", wvar=split)
            im, _ = _quad(env, lo, hi, epsabs=tol, weight="sin", wvar=split)
            self._t[key] = re + 1j * im
        return self._t[key]

    def tau_part(self, x):
        if x not in self._tau:
            sw, g, beta = self.gate.sigma_w, self.gate.gamma, self.beta
            h = lambda s: sw / (2 * np.sqrt(np.pi)) * np.exp(-g * s - beta * s**2)
            tol = 1e-12 * h(0) * self.tau_max
            val, _ = _quad(h, 0, self.tau_max, epsabs=tol, weight="cos", wvar=x)
            self._tau[x] = 2 * val
        return self._tau[x]

    def kernel(self, nu1, nu2, tbar, wbar):
        norm = np.pi * self.gate.sigma_w * self.gate.sigma_T
        return self.time_part(nu2 - nu1, tbar) * self.tau_part(wbar - 0.5 * (nu1 + nu2)) / norm


def brute_force_kernel(w1, w2, tbar, wbar, gate):
    """Detector kernel of a combined gate for one pair of lines, by quadrature."""
    if gate.mode != "combined":
        raise ValueError("brute_force_kernel needs a combined gate")
    return _GateChain(gate).kernel(w1, w2, tbar, wbar)


def brute_force_gated(rho, scheme, n_molecules, channel, gate, tbar, wbar=None):
    """Gated signal from the defining (t, tau) double integral.

    S = 1/(pi sw sT) int dt dtau F_t(t + tau/2) F_t(t - tau/2) h(tau) e^{-gamma|tau|}
        <E(t + tau/2) E*(t - tau/2)>,   h(tau) = int dw/2pi |F_f(w)|^2 e^{i w tau}

    The correlation is a finite sum of exp(i split t - i mid tau) terms, so the
    double integral is done as a product of 1-d adaptive quadratures per term.
    """
    return float(brute_force_gated_grid(rho, scheme, n_molecules, channel, gate,
                                        [tbar], [wbar])[0, 0])


def brute_force_gated_grid(rho, scheme, n_molecules, channel, gate, tbars, wbars):
    """``brute_force_gated`` on a (tbar, wbar) grid, sharing quadratures between points."""
    terms = _field_terms(rho, scheme, channel)
    scale = _scale(channel, n_molecules)
    tbars = np.atleast_1d(np.asarray(tbars, dtype=float))
    wbars = np.atleast_1d(np.asarray(wbars if wbars is not None else [np.nan], dtype=float))
    out = np.zeros((tbars.size, wbars.size))
    if not terms:
        return out
    if gate.mode == "time":
        for i, tb in enumerate(tbars):
            out[i, :] = scale * np.real(sum(w * np.exp(1j * (n2 - n1) * tb)
                                            for w, n1, n2 in terms)) / 2
        return out
    g = gate.gamma
    if gate.mode == "frequency":
        # infinite time window: only stationary (degenerate) terms survive
        for j, wb in enumerate(wbars):
            total = 0j
            for w, n1, n2 in terms:
                if abs(n1 - n2) > 1e-9:
                    continue
                x = wb - 0.5 * (n1 + n2)
                val, _ = _quad(lambda s: np.exp(-g * s), 0, TAU_SPAN / g, weight="cos", wvar=x)
                total += w * 2 * val / (2 * np.pi)
            out[:, j] = scale * total.real
        return out
    chain = _GateChain(gate)
    for i, tb in enumerate(tbars):
        for j, wb in enumerate(wbars):
            total = sum(w * chain.kernel(n1, n2, tb, wb) for w, n1, n2 in terms)
            out[i, j] = scale * total.real
    return out


def brute_force_bare(rho, scheme, n_molecules, channel, t, w, gamma):
    """int_0^{40/gamma} dtau e^{-i w tau - gamma tau} E(t - tau/2) E*(t + tau/2) by quadrature."""
    terms = _field_terms(rho, scheme, channel)
    if not terms:
        return 0j
    wt = np.array([x[0] for x in terms])
    n1 = np.array([x[1] for x in terms])
    n2 = np.array([x[2] for x in terms])

    def corr(s):
        return np.exp(-1j * w * s - gamma * s) * np.sum(
            wt * np.exp(-1j * n1 * (t - s / 2) + 1j * n2 * (t + s / 2)))

    L = TAU_SPAN / gamma
    re, _ = _quad(lambda s: corr(s).real, 0, L)
    im, _ = _quad(lambda s: corr(s).imag, 0, L)
    return _scale(channel, n_molecules) * (re + 1j * im)


def central_second_difference(f, t, h):
    return (f(t + h) - 2 * f(t) + f(t - h)) / h**2


def classical_larmor(pddot: TimeSeries, B: float, max_freq: float | None = None) -> TimeSeries:
    """Larmor intensity B^2 |P''(t)|^2 of a sampled second derivative."""
    if max_freq is not None and not nyquist_ok(pddot.dt, max_freq):
        raise ValueError("series undersampled for the requested maximum frequency")
    return TimeSeries(B**2 * np.abs(pddot.values) ** 2, pddot.t0, pddot.dt)


def wave_equation_field(p: TimeSeries, r: float) -> TimeSeries:
    """Far field of a point dipole, E(r, t) = d^2/dt^2 P(t - r/c) / (c^2 r) in atomic units.

    The second derivative is spectral, so ``p`` should be periodic over its
    window; retardation shifts the time origin by r/c.
    """
    if not r > 0:
        raise ValueError("distance must be positive")
    vals = np.asarray(p.values)
    w = 2 * np.pi * np.fft.fftfreq(vals.size, p.dt)
    d2 = np.fft.ifft(-(w**2) * np.fft.fft(vals))
    if np.isrealobj(vals):
        d2 = d2.real
    return TimeSeries(d2 / (C_AU**2 * r), p.t0 + r / C_AU, p.dt)


def larmor_prefactor(r: float) -> float:
    """B = (4 pi eps0 c^2 r)^-1, atomic units."""
    return 1.0 / (C_AU**2 * r)


def sample_polarization(rho, scheme, t0, dt, n, emission_only=True):
    """(P, -P'') series on a uniform grid, from the state sums."""
    t = t0 + dt * np.arange(n)
    return (TimeSeries(polarization(rho, scheme, t, emission_only), t0, dt),
            TimeSeries(polarization_ddot(rho, scheme, t, emission_only), t0, dt))
