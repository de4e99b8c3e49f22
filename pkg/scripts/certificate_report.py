"""Lyapunov scans for a config file, printed as JSON.

Usage: python scripts/certificate_report.py CONFIG
"""
import argparse
import json

from cblelab.config import load_config
from cblelab.lyapunov import (
    ExplosionCertificate,
    explosion_prob_lower_bound,
    scan_explosion_criterion,
    scan_nonexplosion_criterion,
)
from cblelab.testfunctions import ExpInversePower


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    args = ap.parse_args()
    cfg = load_config(args.config)
    ly, m = cfg.lyapunov, cfg.model
    cert = scan_explosion_criterion(m, ly.delta_grid, ly.y_min, ly.y_max, ly.d0)
    out = {"explosion": cert.to_dict(),
           "nonexplosion": scan_nonexplosion_criterion(m, ly.n, ly.y_max, ly.k).to_dict()}
    if isinstance(cert, ExplosionCertificate):
        out["lower_bound_at_y0"] = explosion_prob_lower_bound(ExpInversePower(cert.delta), m.y0, cert.y_bar)
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
