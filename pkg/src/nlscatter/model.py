"""Level schemes, density matrices and preparation of superposition states.

All quantities are held in atomic units (hbar = 1, energies in Hartree);
eV only appears in files and in `PulseSpec`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np
from scipy.special import wofz

from .units import UNITS

BANDS = ("g", "e", "f")
WEAK_EXCITATION_LIMIT = 0.05


class SchemaError(ValueError):
    """Raised when a level-scheme or config document does not parse."""


class ValidationError(ValueError):
    """Raised when parsed data violates a physical invariant."""


@dataclass(frozen=True, eq=False)
class LevelScheme:
    """Energies (Ha), band tags and transition dipoles (au) of one molecule.

    ``dipoles[a, b]`` is <a|mu|b>, already orientation averaged to a scalar.
    """

    energies: np.ndarray
    band: tuple
    dipoles: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float).copy()
        dipoles = np.asarray(self.dipoles, dtype=complex).copy()
        n = energies.size
        band = tuple(self.band)
        labels = tuple(self.labels) if self.labels else tuple(f"s{i}" for i in range(n))
        if energies.ndim != 1 or n == 0:
            raise ValidationError("energies must be a non-empty 1-d array")
        if not np.all(np.isfinite(energies)):
            raise ValidationError("energies must be finite")
        if len(band) != n or len(labels) != n:
            raise ValidationError("band and labels must have one entry per state")
        bad = [b for b in band if b not in BANDS]
        if bad:
            raise ValidationError(f"unknown band tag(s) {sorted(set(bad))}; allowed {BANDS}")
        if "g" not in band:
            raise ValidationError("level scheme needs at least one state tagged 'g'")
        if dipoles.shape != (n, n):
            raise ValidationError(f"dipoles must be {n}x{n}, got {dipoles.shape}")
        if np.any(np.diag(dipoles) != 0):
            i = int(np.flatnonzero(np.diag(dipoles))[0])
            raise ValidationError(f"diagonal dipole on state {labels[i]!r} must be zero")
        diff = np.abs(dipoles - dipoles.conj().T)
        if np.any(diff > 1e-12):
            i, j = np.unravel_index(np.argmax(diff), diff.shape)
            raise ValidationError(
                f"dipole matrix not Hermitian for pair ({labels[i]}, {labels[j]}): "
                f"{dipoles[i, j]} vs conj({dipoles[j, i]})"
            )
        energies.setflags(write=False)
        dipoles.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "dipoles", dipoles)
        object.__setattr__(self, "band", band)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.energies.size

    @property
    def omega(self) -> np.ndarray:
        """omega[a, b] = eps_a - eps_b."""
        return self.energies[:, None] - self.energies[None, :]

    @property
    def ground(self) -> int:
        """Index of the lowest state tagged 'g'."""
        idx = self.indices("g")
        return int(idx[np.argmin(self.energies[idx])])

    def indices(self, tag: str) -> np.ndarray:
        return np.array([i for i, b in enumerate(self.band) if b == tag], dtype=int)

    def has_intraband_dipoles(self, tags=("g", "e")) -> bool:
        band = np.array(self.band)
        same = band[:, None] == band[None, :]
        sel = np.isin(band, tags)
        return bool(np.any((self.dipoles != 0) & same & sel[:, None] & sel[None, :]))

    def shifted(self, delta: float) -> "LevelScheme":
        return LevelScheme(self.energies + delta, self.band, self.dipoles, self.labels)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.energies).tobytes())
        h.update(np.ascontiguousarray(self.dipoles).tobytes())
        h.update("".join(self.band).encode())
        return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    rho: np.ndarray
    atol: float = 1e-12

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValidationError("density matrix must be square")
        if np.max(np.abs(rho - rho.conj().T)) > self.atol:
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > self.atol:
            raise ValidationError(f"trace is {np.trace(rho).real:.3e}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValidationError("density matrix has a negative eigenvalue")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


@dataclass(frozen=True, eq=False)
class PreparedState:
    """Pure state amplitudes kappa_j over all states of a scheme."""

    kappa: np.ndarray

    def __post_init__(self):
        kappa = np.array(self.kappa, dtype=complex).ravel()
        norm = np.sum(np.abs(kappa) ** 2)
        if abs(norm - 1.0) > 1e-8:
            raise ValidationError(f"kappa not normalized: sum |kappa|^2 = {norm:.12g}")
        kappa.setflags(write=False)
        object.__setattr__(self, "kappa", kappa)

    def excited_population(self, ground: int = 0) -> np.ndarray:
        pop = np.abs(self.kappa) ** 2
        return np.delete(pop, ground)

    def weakly_excited(self, ground: int = 0) -> bool:
        """True when max_e |kappa_e|^2 < 0.05 (most population in the ground state)."""
        exc = self.excited_population(ground)
        return bool(exc.size == 0 or exc.max() < WEAK_EXCITATION_LIMIT)


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian X-ray pulse; all frequencies in eV."""

    center: float
    width: float
    amplitude: float = 1.0
    lifetime_gamma: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValidationError("pulse width must be positive")
        if self.lifetime_gamma < 0:
            raise ValidationError("lifetime_gamma must be non-negative")

    def envelope(self, omega_ha):
        """Spectral envelope at angular frequency ``omega_ha`` (Ha)."""
        c = UNITS.ev_to_ha(self.center)
        w = UNITS.ev_to_ha(self.width)
        return self.amplitude * np.exp(-((omega_ha - c) ** 2) / (2 * w**2))


# --------------------------------------------------------------------- I/O

SCHEME_SCHEMA = {
    "type": "object",
    "required": ["states"],
    "properties": {
        "states": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["energy_ev", "band"],
                "properties": {
                    "label": {"type": "string"},
                    "energy_ev": {"type": "number"},
                    "band": {"enum": list(BANDS)},
                },
            },
        },
        "dipoles": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["i", "j", "re"],
                "properties": {
                    "i": {"type": "integer", "minimum": 0},
                    "j": {"type": "integer", "minimum": 0},
                    "re": {"type": "number"},
                    "im": {"type": "number"},
                },
            },
        },
    },
}


def scheme_from_dict(doc: dict) -> LevelScheme:
    try:
        jsonschema.validate(doc, SCHEME_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"level scheme field {where}: {exc.message}") from None
    states = doc["states"]
    n = len(states)
    energies = UNITS.ev_to_ha(np.array([s["energy_ev"] for s in states], dtype=float))
    band = tuple(s["band"] for s in states)
    labels = tuple(s.get("label", f"s{i}") for i, s in enumerate(states))
    mu = np.zeros((n, n), dtype=complex)
    given = np.zeros((n, n), dtype=bool)
    for k, d in enumerate(doc.get("dipoles", [])):
        i, j = d["i"], d["j"]
        if i >= n or j >= n:
            raise SchemaError(f"level scheme field dipoles/{k}: state index out of range")
        mu[i, j] = complex(d["re"], d.get("im", 0.0))
        given[i, j] = True
    # entries listed one-sided are completed by Hermiticity
    fill = given.T & ~given
    mu[fill] = mu.T[fill].conj()
    return LevelScheme(energies, band, mu, labels)


def scheme_to_dict(scheme: LevelScheme) -> dict:
    states = [
        {"label": lab, "energy_ev": float(UNITS.ha_to_ev(e)), "band": b}
        for lab, e, b in zip(scheme.labels, scheme.energies, scheme.band)
    ]
    dipoles = []
    for i, j in zip(*np.nonzero(np.triu(scheme.dipoles != 0, 1))):
        m = scheme.dipoles[i, j]
        dipoles.append({"i": int(i), "j": int(j), "re": float(m.real), "im": float(m.imag)})
    return {"states": states, "dipoles": dipoles}


def load_level_scheme(path) -> LevelScheme:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scheme_from_dict(doc)


def save_level_scheme(scheme: LevelScheme, path) -> None:
    Path(path).write_text(json.dumps(scheme_to_dict(scheme), indent=1) + "\n")


# ------------------------------------------------------------- generators

def generate_synthetic_manifold(
    n_valence: int,
    e_min: float,
    e_max: float,
    seed: int,
    intraband: bool = False,
    intraband_scale: float = 1.0,
    n_core: int = 0,
    core_energy: float = 400.0,
    core_spread: float = 2.0,
) -> LevelScheme:
    """Random molecule-like scheme: ground state at 0 plus a valence band.

    Energies (eV) are drawn uniformly in [e_min, e_max], ground-valence
    dipoles uniformly in [0.1, 1.0] au. Optional core states sit in
    [core_energy, core_energy + core_spread] and couple to every valence state.
    """
    if n_valence < 1:
        raise ValueError("n_valence must be >= 1")
    if not e_min < e_max:
        raise ValueError("need e_min < e_max")
    rng = np.random.default_rng(seed)
    ev = np.sort(rng.uniform(e_min, e_max, n_valence))
    n = 1 + n_valence + n_core
    mu = np.zeros((n, n))
    mu[0, 1 : 1 + n_valence] = rng.uniform(0.1, 1.0, n_valence)
    if intraband:
        k = np.triu_indices(n_valence, 1)
        vals = intraband_scale * rng.uniform(0.1, 1.0, len(k[0]))
        mu[1 + k[0], 1 + k[1]] = vals
    energies = [0.0, *ev]
    if n_core:
        fc = np.sort(rng.uniform(core_energy, core_energy + core_spread, n_core))
        energies.extend(fc)
        core = slice(1 + n_valence, n)
        mu[: 1 + n_valence, core] = rng.uniform(0.1, 1.0, (1 + n_valence, n_core))
    mu = mu + mu.T
    band = ("g",) + ("e",) * n_valence + ("f",) * n_core
    labels = ("g0",) + tuple(f"e{i + 1}" for i in range(n_valence)) + tuple(
        f"f{i + 1}" for i in range(n_core)
    )
    return LevelScheme(UNITS.ev_to_ha(np.array(energies)), band, mu, labels)


# ------------------------------------------------------------ preparation

def rho_from_kappa(state: PreparedState) -> DensityMatrix:
    k = state.kappa if isinstance(state, PreparedState) else PreparedState(state).kappa
    return DensityMatrix(np.outer(k, k.conj()))


def _gaussian_resonance_integral(m, s, z):
    """Integral over x of exp(-(x-m)^2 / 2s^2) / (x - z), Im z <= 0."""
    zeta = (z - m) / (np.sqrt(2.0) * s)
    return -1j * np.pi * np.conj(wofz(np.conj(zeta)))


def raman_amplitudes(scheme: LevelScheme, pump: PulseSpec, stokes: PulseSpec) -> np.ndarray:
    """Unnormalized second-order amplitudes kappa_e of the stimulated Raman process.

    kappa_e = -(1/2pi) sum_f mu_ef mu_fg  int dw E2*(w - w_eg) E1(w) / (w - w_fg + i G_f)

    with Gaussian envelopes; G_f is taken from the pump (the pulse resonant
    with the core manifold). Initial state and core states get 0.
    """
    core = scheme.indices("f")
    if core.size == 0:
        raise ValidationError("Raman pathway requires f manifold")
    g = scheme.ground
    targets = np.array([i for i in range(scheme.n) if scheme.band[i] != "f" and i != g])
    kappa = np.zeros(scheme.n, dtype=complex)
    if targets.size == 0 or pump.amplitude == 0 or stokes.amplitude == 0:
        return kappa
    c1, w1 = UNITS.ev_to_ha(pump.center), UNITS.ev_to_ha(pump.width)
    c2, w2 = UNITS.ev_to_ha(stokes.center), UNITS.ev_to_ha(stokes.width)
    gamma = UNITS.ev_to_ha(pump.lifetime_gamma)
    w_eg = scheme.energies[targets] - scheme.energies[g]
    # E2*(w - w_eg) E1(w) is a single Gaussian in w
    prec = 1 / w1**2 + 1 / w2**2
    mean = (c1 / w1**2 + (c2 + w_eg) / w2**2) / prec
    s = 1 / np.sqrt(prec)
    amp = pump.amplitude * stokes.amplitude * np.exp(
        -((c1 - c2 - w_eg) ** 2) / (2 * (w1**2 + w2**2))
    )
    w_fg = scheme.energies[core] - scheme.energies[g]
    integral = _gaussian_resonance_integral(
        mean[:, None], s, w_fg[None, :] - 1j * gamma
    )  # (targets, core)
    path = scheme.dipoles[np.ix_(targets, core)] * scheme.dipoles[core, g][None, :]
    kappa[targets] = -amp * np.sum(path * integral, axis=1) / (2 * np.pi)
    return kappa


def raman_prepare(scheme: LevelScheme, pump: PulseSpec, stokes: PulseSpec | None = None) -> PreparedState:
    """Pure state after stimulated Raman excitation; ``stokes`` defaults to the pump."""
    kappa = raman_amplitudes(scheme, pump, pump if stokes is None else stokes)
    kappa[scheme.ground] = 1.0
    return PreparedState(kappa / np.linalg.norm(kappa))


def band_filter(rho, scheme: LevelScheme, bands) -> np.ndarray:
    """Boolean mask of nonzero rho elements whose (row band, column band) is in ``bands``."""
    bands = {tuple(p) for p in bands}
    for pair in bands:
        for tag in pair:
            if tag not in BANDS:
                raise ValueError(f"unknown band tag {tag!r}")
    r = rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho)
    tags = np.array(scheme.band)
    sel = np.zeros(r.shape, dtype=bool)
    for a, b in bands:
        sel |= (tags[:, None] == a) & (tags[None, :] == b)
    return sel & (r != 0)
