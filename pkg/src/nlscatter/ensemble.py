"""Multi-molecule sums: directional coherent and isotropic incoherent emission.

Molecule ``a`` at r_a is excited with phase exp(i k_n . r_a) and its field
reaches the detector at r_D as exp(i w |r_D - r_a| / c) / |r_D - r_a|. The
coherent channel sums these phasors over ordered pairs a != b; the
incoherent channel adds 1/R_a^2 intensities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signals import A_TILDE2, polarization_ddot, s_coh_freq, s_inc_freq, s_inc_time
from .units import C_AU

SMALL_SAMPLE_LIMIT = 0.1  # k R_c at or below this counts as a small sample


@dataclass(frozen=True, eq=False)
class SampleGeometry:
    """Positions, detector and excitation wavevector, all in atomic units.

    ``grains`` is an optional integer label per molecule; molecules sharing a
    label form one coherent grain.
    """

    positions: np.ndarray
    detector: np.ndarray
    k_n: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R_c: float = 0.0
    grains: np.ndarray | None = None

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.shape[0] < 1 or pos.shape[1] != 3:
            raise ValueError("positions must be an (N, 3) array with N >= 1")
        det = np.asarray(self.detector, dtype=float).reshape(3)
        if np.any(np.linalg.norm(pos - det, axis=1) <= 0):
            raise ValueError("a molecule sits on the detector")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "detector", det)
        object.__setattr__(self, "k_n", np.asarray(self.k_n, dtype=float).reshape(3))
        if self.grains is not None:
            object.__setattr__(self, "grains", partition_labels(self.grains, pos.shape[0]))

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def distances(self) -> np.ndarray:
        return np.linalg.norm(self.positions - self.detector, axis=1)

    @property
    def small_sample(self) -> bool:
        return bool(np.linalg.norm(self.k_n) * self.R_c <= SMALL_SAMPLE_LIMIT)

    def with_detector(self, detector) -> "SampleGeometry":
        return SampleGeometry(self.positions, detector, self.k_n, self.R_c, self.grains)

    def translated(self, shift) -> "SampleGeometry":
        return SampleGeometry(self.positions + np.asarray(shift, float), self.detector,
                              self.k_n, self.R_c, self.grains)


def partition_labels(grains, n: int) -> np.ndarray:
    """Grain label per molecule from labels or from a list of index groups."""
    if not isinstance(grains, np.ndarray) and all(np.isscalar(g) for g in grains):
        grains = np.asarray(grains, dtype=int)
    if isinstance(grains, np.ndarray) and grains.ndim == 1 and grains.dtype.kind in "iu":
        if grains.size != n:
            raise ValueError("one grain label per molecule required")
        return grains.astype(int)
    labels = np.full(n, -1)
    for g, members in enumerate(grains):
        members = np.asarray(members, dtype=int)
        if np.any(labels[members] >= 0):
            raise ValueError("grains overlap")
        labels[members] = g
    if np.any(labels < 0):
        raise ValueError("grains do not cover every molecule")
    return labels


def sample_positions(shape: str, R_c: float, N: int, seed: int, detector_distance: float | None = None,
                     detector_direction=(0.0, 0.0, 1.0), k_n=(0.0, 0.0, 0.0),
                     thickness: float | None = None) -> SampleGeometry:
    """Uniform random molecules in a sphere of radius R_c or a slab.

    The slab spans [-R_c, R_c] in x and y and ``thickness`` (default R_c / 10)
    in z. The detector defaults to 1e4 R_c from the origin.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    if shape == "sphere":
        v = rng.normal(size=(N, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        pos = v * R_c * rng.uniform(size=(N, 1)) ** (1 / 3)
        extent = R_c
    elif shape == "slab":
        h = R_c / 10 if thickness is None else thickness
        pos = rng.uniform(-1, 1, size=(N, 3)) * np.array([R_c, R_c, h / 2])
        extent = np.sqrt(2 * R_c**2 + h**2 / 4)
    else:
        raise ValueError(f"unknown sample shape {shape!r}")
    dist = 1e4 * max(R_c, 1.0) if detector_distance is None else detector_distance
    if dist <= extent:
        raise ValueError("detector lies inside the sample")
    u = np.asarray(detector_direction, float)
    return SampleGeometry(pos, dist * u / np.linalg.norm(u), k_n, R_c)


def phasors(geom: SampleGeometry, w, retardation: bool = True) -> np.ndarray:
    """exp(i(k_n.r + w R/c)) / R per molecule; shape w.shape + (N,)."""
    R = geom.distances
    base = geom.positions @ geom.k_n
    w = np.asarray(w, dtype=float)
    phase = base + (np.multiply.outer(w, R) / C_AU if retardation else 0.0 * w[..., None])
    return np.exp(1j * phase) / R


def pair_sum(phi) -> np.ndarray:
    """sum over ordered pairs a != b of phi_a phi_b^*."""
    return np.abs(phi.sum(axis=-1)) ** 2 - np.sum(np.abs(phi) ** 2, axis=-1)


def coherent_ensemble_freq(rho, scheme, geom: SampleGeometry, w, gamma, retardation: bool = True,
                           include_self: bool = False):
    """Frequency-gated coherent signal of the phased molecular sum.

    Self terms a == b are excluded unless ``include_self``, which gives the
    full |sum_a phi_a|^2 of the coherent field.
    """
    w = np.asarray(w, dtype=float)
    per_pair = 0.5 * s_coh_freq(rho, scheme, 2, w, gamma)  # A~^2 sum nu^4 |mu rho|^2 L
    phi = phasors(geom, w, retardation)
    total = np.abs(phi.sum(axis=-1)) ** 2 if include_self else pair_sum(phi)
    return total * per_pair


def incoherent_ensemble_freq(rho, scheme, geom: SampleGeometry, w, gamma):
    """sum_a R_a^-2 times the single-molecule incoherent spectrum; isotropic."""
    return np.sum(geom.distances**-2.0) * s_inc_freq(rho, scheme, 1, w, gamma)


def ensemble_total_freq(rho, scheme, geom, w, gamma, retardation: bool = True):
    return (coherent_ensemble_freq(rho, scheme, geom, w, gamma, retardation)
            + incoherent_ensemble_freq(rho, scheme, geom, w, gamma))


def coherent_ensemble_time(rho, scheme, geom: SampleGeometry, t, retardation: bool = True):
    """(A~^2/2) sum_{a != b} phi_a phi_b^* P''(t - R_a/c) P''^*(t - R_b/c)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    R = geom.distances
    delay = R / C_AU if retardation else np.zeros_like(R)
    amp = np.exp(1j * geom.positions @ geom.k_n) / R
    p = polarization_ddot(rho, scheme, t[:, None] - delay[None, :], emission_only=True)
    return 0.5 * A_TILDE2 * pair_sum(amp * p)


def incoherent_ensemble_time(rho, scheme, geom: SampleGeometry, t, retardation: bool = True):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    R = geom.distances
    delay = R / C_AU if retardation else np.zeros_like(R)
    out = np.zeros(t.shape)
    for r, d in zip(R, delay):
        out += s_inc_time(rho, scheme, 1, t - d) / r**2
    return out


def directional_scan(rho, scheme, geom: SampleGeometry, w, angles_deg, gamma,
                     retardation: bool = True):
    """Coherent intensity with the detector moved on a circle in the x-z plane.

    Angle 0 is +z; the detector keeps its distance from the origin.
    """
    theta = np.deg2rad(np.asarray(angles_deg, dtype=float))
    dist = np.linalg.norm(geom.detector)
    dets = dist * np.stack([np.sin(theta), np.zeros_like(theta), np.cos(theta)], axis=1)
    line = 0.5 * s_coh_freq(rho, scheme, 2, w, gamma)
    base = geom.positions @ geom.k_n
    out = np.empty(theta.size)
    for i, d in enumerate(dets):
        R = np.linalg.norm(geom.positions - d, axis=1)
        phase = base + (w * R / C_AU if retardation else 0.0)
        out[i] = pair_sum(np.exp(1j * phase) / R)
    return out * line


# ------------------------------------------------------------------ scaling

@dataclass(frozen=True)
class ScalingReport:
    x: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    slope: float
    slope_all: float
    variable: str = "N"


def fit_loglog_slope(x, y) -> float:
    if np.size(x) < 2:
        raise ValueError("a log-log slope needs at least two points")
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def make_report(x, samples, variable="N") -> ScalingReport:
    """Log-log slope over the upper half of the sweep, plus the full-range fit."""
    x = np.asarray(x, dtype=float)
    mean = np.array([np.mean(s) for s in samples])
    stderr = np.array([np.std(s, ddof=1) / np.sqrt(len(s)) if len(s) > 1 else 0.0
                       for s in samples])
    upper = x >= np.sort(x)[-max(2, (x.size + 1) // 2)]
    return ScalingReport(x, mean, stderr, fit_loglog_slope(x[upper], mean[upper]),
                         fit_loglog_slope(x, mean), variable)


def scaling_sweep(rho, scheme, w, gamma, Ns=(8, 16, 32, 64), seeds=range(32), shape="sphere",
                  k: float | None = None, kR=0.01, detector_distance=None):
    """Small-sample N sweep of both channels at detected frequency ``w`` (Ha).

    Returns (coherent report, incoherent report).
    """
    k = w / C_AU if k is None else k
    R_c = kR / k
    # geometry-independent line factors, as in the *_ensemble_freq functions
    line_c = 0.5 * s_coh_freq(rho, scheme, 2, w, gamma)
    line_i = s_inc_freq(rho, scheme, 1, w, gamma)
    coh, inc = [], []
    for N in Ns:
        c_s, i_s = [], []
        for seed in seeds:
            geom = sample_positions(shape, R_c, N, seed, detector_distance,
                                    k_n=(0.0, 0.0, k))
            c_s.append(float(pair_sum(phasors(geom, w)) * line_c))
            i_s.append(float(np.sum(geom.distances**-2.0) * line_i))
        coh.append(c_s)
        inc.append(i_s)
    return make_report(Ns, coh), make_report(Ns, inc)


def grained_geometry(n_grains: int, m: int, grain_radius: float, seed: int,
                     detector_distance: float, spacing: float | None = None) -> SampleGeometry:
    """n_grains grains of m molecules each; grains are spread ``spacing`` apart."""
    rng = np.random.default_rng(seed)
    spacing = 10 * grain_radius if spacing is None else spacing
    centers = rng.uniform(-1, 1, size=(n_grains, 3)) * spacing * n_grains ** (1 / 3)
    v = rng.normal(size=(n_grains * m, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    pos = np.repeat(centers, m, axis=0) + v * grain_radius * rng.uniform(size=(n_grains * m, 1)) ** (1 / 3)
    labels = np.repeat(np.arange(n_grains), m)
    return SampleGeometry(pos, (0.0, 0.0, detector_distance), np.zeros(3), grain_radius, labels)


def grain_signal_mean(geom: SampleGeometry, w, retardation=True) -> float:
    """Phase-averaged grain signal: intra-grain ordered pairs only (line factor excluded)."""
    if geom.grains is None:
        raise ValueError("geometry has no grains")
    phi = phasors(geom, w, retardation)
    return float(sum(pair_sum(phi[geom.grains == g]) for g in np.unique(geom.grains)))


def grain_signal_samples(geom: SampleGeometry, w, n_real: int, rng, retardation=True):
    """Coherent pair sum with an independent uniform random phase per grain.

    Returns one sample per phase realization (line factor excluded).
    """
    if geom.grains is None:
        raise ValueError("geometry has no grains")
    phi = phasors(geom, w, retardation)
    n_g = geom.grains.max() + 1
    grain_sum = np.bincount(geom.grains, weights=phi.real, minlength=n_g) + 1j * np.bincount(
        geom.grains, weights=phi.imag, minlength=n_g)
    theta = rng.uniform(0, 2 * np.pi, size=(n_real, n_g))
    total = np.exp(1j * theta) @ grain_sum
    return np.abs(total) ** 2 - np.sum(np.abs(phi) ** 2)


def hyper_rayleigh_scaling(rho, scheme, w, gamma, vary="N", values=(4, 8, 16, 32, 64),
                           fixed=8, n_real=4096, seeds=range(4), grain_radius=None,
                           detector_distance=None) -> ScalingReport:
    """Mean grain-model coherent signal versus grain count N (vary='N') or grain size M.

    Grains are small (k a = 0.01) so each is internally in phase; inter-grain
    phases are randomized per realization.
    """
    k = w / C_AU
    a = 0.01 / k if grain_radius is None else grain_radius
    dist = 1e6 * a if detector_distance is None else detector_distance
    line = float(0.5 * s_coh_freq(rho, scheme, 2, w, gamma))
    samples = []
    for v in values:
        n_g, m = (v, fixed) if vary == "N" else (fixed, v)
        vals = []
        for seed in seeds:
            geom = grained_geometry(n_g, m, a, seed, dist)
            rng = np.random.default_rng([int(seed), int(v), 7])
            vals.append(grain_signal_samples(geom, w, n_real, rng) * line)
        samples.append(np.concatenate(vals))
    return make_report(values, samples, vary)
