"""Run the synthetic scenarios through the CLI and print a short summary.

    python3 scripts/run_scenarios.py [OUTDIR]

Writes CSV/JSON/gnuplot files under OUTDIR (default: scenarios/).
"""

import json
import sys
from pathlib import Path

import numpy as np

from nlscatter import cli
from nlscatter.gating import beat_contrast
from nlscatter.io import read_table

CONFIGS = Path(__file__).parent / "configs"


def run(command, config, out):
    code = cli.main([command, "--config", str(CONFIGS / config), "--out", str(out)])
    if code:
        sys.exit(f"{command} {config} failed with exit code {code}")


def spectrum_summary(out, label):
    cols = read_table(out / "spectrum_frequency.csv")[1]
    w, coh, inc = cols["wbar_ev"], cols["coherent"], cols["incoherent"]
    low, high = w < 5.0, w > 5.75
    ratio_high = coh[high].max() / inc[high].max()
    ratio_low = coh[low].max() / inc[low].max()
    t = read_table(out / "spectrum_time.csv")[1]

    def dist(a, b):
        return np.linalg.norm(a / np.linalg.norm(a) - b / np.linalg.norm(b))

    print(f"{label}: peak DFG/SRIF above 5.75 eV {ratio_high:.4f}, below 5 eV {ratio_low:.2e}")
    print(f"{label}: normalized DFG-SRIF distance, frequency {dist(coh, inc):.3f}, "
          f"time {dist(t['coherent'], t['incoherent']):.3f}")


def spectrogram_summary(out):
    for path in sorted(out.glob("spectrogram_incoherent_*.json")):
        side = json.loads(path.read_text())
        cols = read_table(path.with_suffix(".csv"))[1]
        n_t, n_w = side["shape"]
        vals = cols["value"].reshape(n_t, n_w)
        j = np.argmax(vals.mean(axis=0))
        g = side["gate"]
        print(f"spectrogram sigma_T={g['sigma_T_au']:g} sigma_w={g['sigma_w_ha']:g}: "
              f"window {side['window_ev']:.4f} eV, beat contrast at the main peak "
              f"{beat_contrast(vals[:, j]):.3f}")


def prepare_summary(out, label):
    state = json.loads((out / "state.json").read_text())
    scheme = json.loads((out / "scheme.json").read_text())
    ev = np.array([s["energy_ev"] for s in scheme["states"] if s["band"] == "e"])
    pop = np.array([abs(complex(*k)) ** 2 for k, s in zip(state["kappa"], scheme["states"])
                    if s["band"] == "e"])
    upper = pop[ev > 0.5 * (ev.min() + ev.max())].sum() / pop.sum()
    print(f"{label}: excited population {state['excited_population_sum']:.2e}, "
          f"fraction in upper half of the band {upper:.3f}")


def main():
    root = Path(sys.argv[1] if len(sys.argv) > 1 else "scenarios")
    for name in ("broadband", "narrowband"):
        run("prepare", f"{name}.json", root / name)
        run("spectrum", f"{name}.json", root / name)
        prepare_summary(root / name, name)
        spectrum_summary(root / name, name)
    run("spectrogram", "spectrograms.json", root / "spectrograms")
    spectrogram_summary(root / "spectrograms")
    run("ensemble", "ensemble.json", root / "ensemble")
    for stem in ("scaling", "grain_scaling"):
        doc = json.loads((root / "ensemble" / f"{stem}.json").read_text())
        for k, v in doc["slopes"].items():
            print(f"{stem} {k}: slope {v['slope']:.3f} (all points {v['slope_all']:.3f})")


if __name__ == "__main__":
    main()
