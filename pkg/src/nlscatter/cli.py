"""Command-line front end: ``nlscatter {synth,prepare,spectrum,spectrogram,ensemble}``.

Each run reads one JSON config, fills defaults, and writes the resolved
config into every output. Exit codes: 0 success, 2 config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import ensemble as ens
from . import io
from .gating import GateSpec, gated_spectrogram
from .model import (
    PreparedState,
    PulseSpec,
    generate_synthetic_manifold,
    load_level_scheme,
    raman_prepare,
    rho_from_kappa,
    save_level_scheme,
    scheme_to_dict,
)
from .oracles import QuadratureError
from .signals import coherent_amplitudes, s_coh_freq, s_coh_time, s_inc_freq, s_inc_time
from .units import C_AU, UNITS

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


DEFAULTS = {
    "seed": 1,
    "scheme": {
        "path": None,
        "synthetic": {
            "n_valence": 50, "e_min": 5.75, "e_max": 11.5, "intraband": False,
            "intraband_scale": 1.0, "n_core": 5, "core_energy": 400.0, "core_spread": 2.0,
        },
    },
    "pump": None,
    "stokes": None,
    "state": None,
    "n_molecules": 2,
    "gamma_ev": 0.04,
    "mode": "both",
    "grid": {"t_max_fs": 300.0, "n_t": 512, "w_min_ev": 0.0, "w_max_ev": None, "n_w": 1024},
    "gates": [{"sigma_T": 1000.0, "sigma_w": 0.001}],
    "channels": ["incoherent"],
    "ensemble": {
        "w_ev": None,
        "Ns": [8, 16, 32, 64],
        "n_seeds": 32,
        "shape": "sphere",
        "kR": 0.01,
        "scan": {"shape": "slab", "kR": 50.0, "N": 400, "angles_deg": [-20.0, 20.0, 161]},
        "grains": {"values": [4, 8, 16, 32, 64], "fixed": 8, "n_real": 4096, "n_seeds": 4},
    },
}


def _merge(base, over, path=""):
    if not isinstance(base, dict) or not isinstance(over, dict):
        return copy.deepcopy(over)
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        out[k] = _merge(base[k], v, f"{path}{k}.") if isinstance(base[k], dict) else copy.deepcopy(v)
    return out


def resolve_config(path, seed=None) -> dict:
    """Defaults overlaid with the config file; relative paths become absolute."""
    path = Path(path)
    try:
        user = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    cfg = _merge(DEFAULTS, user)
    if seed is not None:
        cfg["seed"] = int(seed)
    if cfg["scheme"].get("path"):
        cfg["scheme"]["path"] = str((path.parent / cfg["scheme"]["path"]).resolve())
    if cfg["state"]:
        cfg["state"] = str((path.parent / cfg["state"]).resolve())
    return cfg


# ------------------------------------------------------------------ helpers

def _pulse(doc):
    if doc is None:
        return None
    try:
        return PulseSpec(**doc)
    except TypeError as exc:
        raise ConfigError(f"pulse config: {exc}; fields are center, width, amplitude, "
                          "lifetime_gamma") from None


def build_scheme(cfg):
    sc = cfg["scheme"]
    if sc.get("path"):
        return load_level_scheme(sc["path"])
    return generate_synthetic_manifold(seed=cfg["seed"], **sc["synthetic"])


def build_state(cfg, scheme):
    """Prepared state from a state file or from the configured pulses."""
    if cfg["state"]:
        doc = json.loads(Path(cfg["state"]).read_text())
        kappa = np.array([complex(re, im) for re, im in doc["kappa"]])
        if kappa.size != scheme.n:
            raise ConfigError("state file does not match the level scheme")
        return PreparedState(kappa)
    pump = _pulse(cfg["pump"])
    if pump is None:
        raise ConfigError("config needs either 'state' or a 'pump' pulse")
    return raman_prepare(scheme, pump, _pulse(cfg["stokes"]))


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalError("non-finite values in the computed signal")


def _w_grid(cfg, scheme):
    g = cfg["grid"]
    top = g["w_max_ev"]
    if top is None:
        emitting = scheme.omega[np.ix_(*(np.flatnonzero(np.array(scheme.band) != "f"),) * 2)]
        top = 1.2 * UNITS.ha_to_ev(max(emitting.max(), 1e-6))
    return UNITS.ev_to_ha(np.linspace(g["w_min_ev"], top, int(g["n_w"])))


def _t_grid(cfg):
    g = cfg["grid"]
    return UNITS.fs_to_au(np.linspace(0.0, g["t_max_fs"], int(g["n_t"])))


# ----------------------------------------------------------------- commands

def cmd_synth(cfg, out: Path, threads: int = 1):
    scheme = build_scheme(cfg)
    doc = scheme_to_dict(scheme)
    doc["provenance"] = {"config": cfg, "scheme_hash": scheme.digest()}
    io.write_json(out / "scheme.json", doc)
    return [out / "scheme.json"]


def cmd_prepare(cfg, out: Path, threads: int = 1):
    scheme = build_scheme(cfg)
    state = build_state(cfg, scheme)
    rho = rho_from_kappa(state).rho
    _finite(state.kappa)
    pop = state.excited_population(scheme.ground)
    doc = {
        "labels": list(scheme.labels),
        "kappa": [[float(k.real), float(k.imag)] for k in state.kappa],
        "rho": [[[float(x.real), float(x.imag)] for x in row] for row in rho],
        "excited_population_max": float(pop.max()) if pop.size else 0.0,
        "excited_population_sum": float(pop.sum()),
        "weakly_excited": state.weakly_excited(scheme.ground),
        "scheme_hash": scheme.digest(),
        "config": cfg,
    }
    path = io.write_json(out / "state.json", doc)
    if not cfg["scheme"].get("path"):
        save_level_scheme(scheme, out / "scheme.json")
        return [path, out / "scheme.json"]
    return [path]


def cmd_spectrum(cfg, out: Path, threads: int = 1):
    scheme = build_scheme(cfg)
    rho = rho_from_kappa(build_state(cfg, scheme))
    n = int(cfg["n_molecules"])
    gamma = UNITS.ev_to_ha(cfg["gamma_ev"])
    mode = cfg["mode"]
    if mode not in ("frequency", "time", "both"):
        raise ConfigError("mode must be 'frequency', 'time' or 'both'")
    written = []
    if mode in ("frequency", "both"):
        w = _w_grid(cfg, scheme)
        c, i = s_coh_freq(rho, scheme, n, w, gamma), s_inc_freq(rho, scheme, n, w, gamma)
        _finite(c, i)
        meta = {"axis": "wbar", "unit": "eV", "gamma_ev": cfg["gamma_ev"], "N": n,
                "channel": "coherent,incoherent,total"}
        written.append(io.write_table(out / "spectrum_frequency.csv",
                                      {"wbar_ev": UNITS.ha_to_ev(w), "coherent": c,
                                       "incoherent": i, "total": c + i}, meta, cfg))
    if mode in ("time", "both"):
        t = _t_grid(cfg)
        c, i = s_coh_time(rho, scheme, n, t), s_inc_time(rho, scheme, n, t)
        _finite(c, i)
        meta = {"axis": "tbar", "unit": "fs", "gamma_ev": cfg["gamma_ev"], "N": n,
                "channel": "coherent,incoherent,total"}
        written.append(io.write_table(out / "spectrum_time.csv",
                                      {"tbar_fs": UNITS.au_to_fs(t), "coherent": c,
                                       "incoherent": i, "total": c + i}, meta, cfg))
    return written


def _gate(doc, gamma):
    try:
        return GateSpec("combined", sigma_T=float(doc["sigma_T"]), sigma_w=float(doc["sigma_w"]),
                        gamma=gamma)
    except KeyError as exc:
        raise ConfigError(f"gate needs {exc.args[0]!r} (sigma_T in au, sigma_w in Ha)") from None
    except ValueError as exc:
        raise ConfigError(f"invalid gate {doc}: {exc}") from None


def cmd_spectrogram(cfg, out: Path, threads: int = 1):
    scheme = build_scheme(cfg)
    rho = rho_from_kappa(build_state(cfg, scheme))
    n = int(cfg["n_molecules"])
    gamma = UNITS.ev_to_ha(cfg["gamma_ev"])
    gates = [_gate(g, gamma) for g in cfg["gates"]]
    t, w = _t_grid(cfg), _w_grid(cfg, scheme)
    written = []
    for k, gate in enumerate(gates):
        for channel in cfg["channels"]:
            if channel not in ("coherent", "incoherent"):
                raise ConfigError(f"unknown channel {channel!r}")
            spec = gated_spectrogram(rho, scheme, n, channel, gate, t, w, threads=threads)
            _finite(spec.values)
            written.extend(io.write_spectrogram(out, f"spectrogram_{channel}_{k}", spec, cfg))
    return written


def _detect_frequency(cfg, rho, scheme):
    if cfg["ensemble"]["w_ev"] is not None:
        return UNITS.ev_to_ha(cfg["ensemble"]["w_ev"])
    _, nu, amp = coherent_amplitudes(rho, scheme)
    if nu.size == 0:
        raise ConfigError("state has no coherent emission line; set ensemble.w_ev")
    return float(nu[np.argmax(np.abs(amp))])


def cmd_ensemble(cfg, out: Path, threads: int = 1):
    scheme = build_scheme(cfg)
    rho = rho_from_kappa(build_state(cfg, scheme))
    gamma = UNITS.ev_to_ha(cfg["gamma_ev"])
    e = cfg["ensemble"]
    w = _detect_frequency(cfg, rho, scheme)
    seeds = range(cfg["seed"], cfg["seed"] + int(e["n_seeds"]))
    coh, inc = ens.scaling_sweep(rho, scheme, w, gamma, Ns=tuple(e["Ns"]), seeds=seeds,
                                 shape=e["shape"], kR=e["kR"])
    written = io.write_scaling(out, "scaling", {"coherent": coh, "incoherent": inc}, cfg)

    g = e["grains"]
    gseeds = range(cfg["seed"], cfg["seed"] + int(g["n_seeds"]))
    reps = {
        f"grains_vary_{v}": ens.hyper_rayleigh_scaling(
            rho, scheme, w, gamma, vary=v, values=tuple(g["values"]), fixed=int(g["fixed"]),
            n_real=int(g["n_real"]), seeds=gseeds)
        for v in ("N", "M")
    }
    written += io.write_scaling(out, "grain_scaling", reps, cfg)

    s = e["scan"]
    k = w / C_AU
    geom = ens.sample_positions(s["shape"], s["kR"] / k, int(s["N"]), cfg["seed"],
                                k_n=(0.0, 0.0, k))
    lo, hi, num = s["angles_deg"]
    angles = np.linspace(lo, hi, int(num))
    scan = ens.directional_scan(rho, scheme, geom, w, angles, gamma)
    _finite(coh.mean, inc.mean, scan)
    meta = {"axis": "angle", "unit": "deg", "gamma_ev": cfg["gamma_ev"], "N": int(s["N"]),
            "channel": "coherent", "wbar_ev": f"{float(UNITS.ha_to_ev(w)):.12e}"}
    written.append(io.write_table(out / "scan.csv", {"angle_deg": angles, "intensity": scan},
                                  meta, cfg))
    return written


COMMANDS = {
    "synth": cmd_synth,
    "prepare": cmd_prepare,
    "spectrum": cmd_spectrum,
    "spectrogram": cmd_spectrogram,
    "ensemble": cmd_ensemble,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlscatter", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=None, help="64-bit RNG seed; overrides config")
    p.add_argument("--threads", type=int, default=1, help="worker threads for spectrograms")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must fit in 64 unsigned bits", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = resolve_config(args.config, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        paths = COMMANDS[args.command](cfg, out, threads=max(1, args.threads))
    except (NumericalError, QuadratureError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
