"""Verdict and explosion frequency on a (b0, q0) grid around the critical line.

Usage: python scripts/phase_sweep.py [--n-per-cell N] [--out DIR]
"""
import argparse
import math
from pathlib import Path

import numpy as np

from cblelab.model import BranchingSpec, EnvironmentSpec, ModelSpec, PowerLaw, PureStable
from cblelab.montecarlo import phase_diagram, phase_to_csv, phase_to_json
from cblelab.simulate import SimConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-per-cell", type=int, default=100)
    ap.add_argument("--threads", type=int, default=0)
    ap.add_argument("--y0", type=float, default=5.0)
    ap.add_argument("--out", default="out/phase_sweep")
    args = ap.parse_args()
    base = ModelSpec(BranchingSpec(0.0, 0.0, PureStable(1.0, 0.5)), EnvironmentSpec(),
                     PowerLaw(0.0, 1.5, 1.0), args.y0)
    b0s = np.round(np.linspace(0.0, 4 * math.pi, 9), 6).tolist()
    q0s = [1.2, 1.4, 1.5, 1.6, 2.0]
    d = phase_diagram(base, SimConfig(K_explode=1e8, T_horizon=20.0), ("b0", b0s), ("q0", q0s),
                      args.n_per_cell, args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "phase.csv").write_text(phase_to_csv(d))
    (out / "phase.json").write_text(phase_to_json(d))
    for c in d["cells"]:
        print(f"b0={c.value1:<10.4g} q0={c.value2:<4} {str(c.verdict):<40} p={c.result.estimate:.3f}")


if __name__ == "__main__":
    main()
