"""Hit frequency of level K against ln K for the critical-competition model.

A frequency falling like 1/ln K means the paths make ever rarer excursions
and do not explode; a true explosion probability levels off in K.

Usage: python scripts/k_stability.py [--paths N] [--y0 Y]
"""
import argparse
import math

import numpy as np

from cblelab.model import BranchingSpec, EnvironmentSpec, ModelSpec, PowerLaw, PureStable
from cblelab.montecarlo import estimate_explosion_prob
from cblelab.simulate import SimConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--y0", type=float, default=1.0)
    ap.add_argument("--b0", type=float, default=2 * math.pi)
    ap.add_argument("--threads", type=int, default=0)
    ap.add_argument("--T", type=float, default=20.0)
    args = ap.parse_args()
    m = ModelSpec(BranchingSpec(0.0, 0.0, PureStable(1.0, 0.5)), EnvironmentSpec(),
                  PowerLaw(args.b0, 1.5, 1.0), args.y0)
    Ks = 10.0 ** np.arange(4, 11)
    for K in Ks:
        r = estimate_explosion_prob(m, SimConfig(K_explode=K, T_horizon=args.T), args.paths, args.threads)
        print(f"K=1e{round(math.log10(K)):<3d} p={r.estimate:.4f} [{r.ci_low:.4f}, {r.ci_high:.4f}] "
              f"p*lnK={r.estimate * math.log(K):.3f}")


if __name__ == "__main__":
    main()
