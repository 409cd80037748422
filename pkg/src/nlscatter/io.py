"""Deterministic CSV / JSON writers.

Every file starts with (or carries) the fully resolved run configuration so a
run can be reproduced from its outputs alone. No timestamps are written:
identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .units import UNITS

FLOAT_FMT = "{:.12e}"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _fmt(x) -> str:
    return FLOAT_FMT.format(float(x))


def _header(meta: dict, config: dict) -> list[str]:
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append(f"# config: {canonical_json(config)}")
    return lines


def write_table(path, columns: dict, meta: dict, config: dict) -> Path:
    """Comment header rows, then a named header and one row per grid point."""
    path = Path(path)
    names = list(columns)
    data = [np.ravel(np.asarray(columns[k])) for k in names]
    with path.open("w", newline="") as fh:
        for line in _header(meta, config):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*data):
            writer.writerow([_fmt(v) for v in row])
    return path


def read_table(path):
    """(meta dict, {column: array}) from a file written by ``write_table``."""
    meta, rows, names = {}, [], None
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, val = line[2:].rstrip("\n").partition(": ")
                meta[key] = val
            elif names is None:
                names = line.strip().split(",")
            else:
                rows.append([float(v) for v in line.split(",")])
    arr = np.array(rows).reshape(-1, len(names))
    return meta, {n: arr[:, i] for i, n in enumerate(names)}


def write_json(path, doc: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def write_spectrogram(outdir, stem: str, spec, config: dict, extra_meta: dict | None = None):
    """Long-form CSV (tbar_fs, wbar_ev, value), sidecar JSON and a gnuplot script."""
    outdir = Path(outdir)
    g = spec.gate
    meta = {
        "axis": "tbar,wbar",
        "unit": "fs,eV",
        "channel": spec.channel,
        "N": spec.n_molecules,
        "gamma_ha": _fmt(g.gamma),
    }
    tt, ww = np.meshgrid(spec.t_fs, spec.w_ev, indexing="ij")
    csv_path = write_table(outdir / f"{stem}.csv",
                           {"tbar_fs": tt, "wbar_ev": ww, "value": spec.values}, meta, config)
    side = {
        "channel": spec.channel,
        "n_molecules": spec.n_molecules,
        "scheme_hash": spec.scheme_hash,
        "gate": {"mode": g.mode, "sigma_T_au": g.sigma_T, "sigma_w_ha": g.sigma_w,
                 "gamma_ha": g.gamma},
        "window_ha": spec.window,
        "window_ev": None if spec.window is None else float(UNITS.ha_to_ev(spec.window)),
        "shape": [int(spec.t.size), int(spec.w.size)],
        "config": config,
    }
    if extra_meta:
        side.update(extra_meta)
    json_path = write_json(outdir / f"{stem}.json", side)
    gp = outdir / f"{stem}.gp"
    gp.write_text(
        f"# config: {canonical_json(config)}\n"
        "set datafile separator ','\n"
        "set xlabel 'tbar (fs)'\n"
        "set ylabel 'wbar (eV)'\n"
        f"set title '{spec.channel} spectrogram'\n"
        "set view map\n"
        "set pm3d map\n"
        f"set dgrid3d {spec.t.size},{spec.w.size}\n"
        f"splot '{csv_path.name}' every ::1 using 1:2:3 with pm3d notitle\n"
    )
    return csv_path, json_path, gp


def write_scaling(outdir, stem: str, reports: dict, config: dict):
    """One CSV per report (x, mean, stderr) and a JSON holding the fitted slopes."""
    outdir = Path(outdir)
    paths, slopes = [], {}
    for name, rep in reports.items():
        meta = {"axis": rep.variable, "unit": "count", "channel": name}
        paths.append(write_table(outdir / f"{stem}_{name}.csv",
                                 {rep.variable: rep.x, "mean": rep.mean, "stderr": rep.stderr},
                                 meta, config))
        slopes[name] = {"variable": rep.variable, "slope": rep.slope, "slope_all": rep.slope_all}
    paths.append(write_json(outdir / f"{stem}.json", {"slopes": slopes, "config": config}))
    return paths
