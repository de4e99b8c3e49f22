"""Pathwise simulation with explosion and absorption detection.

Each step of size ``h`` splits the dynamics as

(a) drift ``(b1 + beta - m_eps - m_env) y - b0(y)`` by one explicit midpoint step,
    where ``m_eps = int_[eps,1) z mu(dz)`` compensates the simulated jumps in
    [eps, 1) and ``m_env = int_[-1,1] (e^z - 1) nu(dz)`` the small environment jumps;
(b) branching diffusion ``sqrt(2 b2^2 y h) N``;
(c) environment diffusion ``y exp(sigma dW - sigma^2 h / 2)``;
(d) branching jumps of size >= eps by thinning: candidates at rate
    ``y_hat mu([eps, inf))``, accepted with probability ``y / y_hat``;
(e) branching jumps below eps as a Gaussian with variance ``y h int_0^eps z^2 mu(dz)``;
(f) environment jumps ``y -> y e^z`` at pre-drawn event times.

The state is floored at 0 after every substep and absorbed there. Reaching
``K_explode`` stands in for explosion.

Step size is ``min(dt_max, 0.1 / (y mu([eps, inf))), 0.05 y / |drift|)``,
clipped to the next record time and the next environment event, so the
step grid never depends on whether an event is applied. That is what makes
the truncated and untruncated runs agree exactly up to the first dropped
jump.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernel
from .model import (
    ModelSpec,
    PowerLaw,
    ValidationError,
    mu_tail_mass,
    mu_truncated_moment,
    validate_model,
)

__all__ = [
    "SCHEMA_LINE",
    "SUBSTREAMS",
    "SimConfig",
    "PathRecord",
    "StepUnderflow",
    "simulate_path",
    "simulate_truncated",
    "hitting_times",
]

SCHEMA_LINE = "# cble-lab schema v1"
SUBSTREAMS = ("branch_diffusion", "env_diffusion", "big_jumps", "small_jumps", "env_jumps")


class StepUnderflow(ArithmeticError):
    def __init__(self, t: float, y: float, dt_max: float):
        self.t, self.y = t, y
        super().__init__(f"adaptive step fell below 1e-12*dt_max={1e-12 * dt_max:.3e} at t={t!r}, y={y!r}")


@dataclass(frozen=True)
class SimConfig:
    dt_max: float = 1e-3
    eps_jump: float = 1e-2
    K_explode: float = 1e10
    T_horizon: float = 20.0
    seed: int = 0
    record_grid: float = 0.01
    mu_jumps: bool = True  # False drops every mu-driven term: jumps, compensator, small-jump noise
    hit_levels: tuple = ()

    def __post_init__(self):
        errs = []
        if not self.dt_max > 0:
            errs.append(("dt_max", f"must be > 0, got {self.dt_max}"))
        if not 0 < self.eps_jump <= 1:
            errs.append(("eps_jump", f"must lie in (0, 1], got {self.eps_jump}"))
        if not self.K_explode > 1:
            errs.append(("K_explode", f"must be > 1, got {self.K_explode}"))
        if not (self.T_horizon > 0 and math.isfinite(self.T_horizon)):
            errs.append(("T_horizon", f"must be finite and > 0, got {self.T_horizon}"))
        if not self.record_grid > 0:
            errs.append(("record_grid", f"must be > 0, got {self.record_grid}"))
        if not 0 <= int(self.seed) < 2 ** 64:
            errs.append(("seed", "must be a 64-bit unsigned integer"))
        if errs:
            raise ValidationError(errs)
        object.__setattr__(self, "hit_levels", tuple(float(u) for u in self.hit_levels))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hit_levels"] = list(self.hit_levels)
        return d


@dataclass
class PathRecord:
    t: np.ndarray
    y: np.ndarray
    exploded: bool
    tau_K: float | None
    absorbed: bool
    tau_0: float | None
    K_explode: float
    env_jump_times: np.ndarray
    env_jump_sizes: np.ndarray
    n_steps: int
    truncation_level: float | None = None
    sigma_k: float | None = None  # first dropped environment jump (truncated runs)
    tau_hits: dict = field(default_factory=dict)

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), self.y.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(SCHEMA_LINE + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "y"])
        for t, y in zip(self.t, self.y):
            w.writerow([repr(float(t)), repr(float(y))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "schema": "cble-lab path v1",
            "t": self.t.tolist(),
            "y": self.y.tolist(),
            "exploded": self.exploded,
            "tau_K": self.tau_K,
            "absorbed": self.absorbed,
            "tau_0": self.tau_0,
            "K_explode": self.K_explode,
            "truncation_level": self.truncation_level,
            "sigma_k": self.sigma_k,
            "n_steps": self.n_steps,
            "tau_hits": {repr(u): {"tau_minus": a, "tau_plus": b} for u, (a, b) in self.tau_hits.items()},
            "env_jump_log": {"t": self.env_jump_times.tolist(), "z": self.env_jump_sizes.tolist()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def hitting_times(p: PathRecord, u: float) -> tuple[float | None, float | None]:
    """First recorded times with y <= u and with y >= u (None if never)."""
    below = np.nonzero(p.y <= u)[0]
    above = np.nonzero(p.y >= u)[0]
    tau_minus = float(p.t[below[0]]) if below.size else None
    tau_plus = float(p.t[above[0]]) if above.size else None
    return tau_minus, tau_plus


def _substreams(seed: int, path_key: tuple) -> dict[str, np.random.Generator]:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in path_key))
    return {name: np.random.Generator(np.random.PCG64(child))
            for name, child in zip(SUBSTREAMS, ss.spawn(len(SUBSTREAMS)))}


def _env_schedule(m: ModelSpec, T: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    times, sizes = [], []
    for comp in m.environment.nu:
        count = rng.poisson(comp.rate * T) if comp.rate > 0 else 0
        times.append(np.sort(rng.uniform(0.0, T, count)))
        sizes.append(np.asarray(comp.law.sample(rng, count), dtype=float))
    if not times:
        return np.empty(0), np.empty(0)
    t = np.concatenate(times)
    z = np.concatenate(sizes)
    order = np.argsort(t, kind="stable")
    return t[order], z[order]


def _record_times(T: float, step: float) -> np.ndarray:
    n = int(math.floor(T / step))
    grid = step * np.arange(n + 1)
    grid = grid[grid < T * (1 - 1e-12)]
    return np.append(grid, T)


def _kernel_args(m: ModelSpec, cfg: SimConfig) -> tuple:
    br, env, comp = m.branching, m.environment, m.competition
    mu = br.mu
    eps = cfg.eps_jump
    if cfg.mu_jumps:
        lam_big = mu_tail_mass(mu, eps)
        stable_lo = max(eps, mu.stable_start)
        stable_mass = mu.a_bar * stable_lo ** (-mu.alpha) / mu.alpha
        big_atoms = [(mass, size) for mass, size in mu.atoms if size >= eps and mass > 0]
        atom_sizes = np.array([s for _, s in big_atoms] or [0.0])
        atom_cum = stable_mass + np.cumsum([mm for mm, _ in big_atoms] or [0.0])
        comp_mu = mu_truncated_moment(mu, 1.0, eps, 1.0) if eps < 1 else 0.0
        var_small = mu_truncated_moment(mu, 2.0, 0.0, eps)
    else:
        lam_big = stable_mass = var_small = comp_mu = 0.0
        stable_lo = 1.0
        atom_sizes, atom_cum = np.array([0.0]), np.array([0.0])
    lin = br.b1 + env.beta - comp_mu - (env.small_jump_compensator() if env.nu else 0.0)
    if isinstance(comp, PowerLaw):
        kind, tab_x, tab_y, slope = 0, np.zeros(2), np.zeros(2), 0.0
        b0, q0, cA = float(comp.b0), float(comp.q0), float(comp.A)
    else:
        kind, b0, q0, cA = 1, 0.0, 0.0, 0.0
        tab_x = np.array([p[0] for p in comp.breakpoints])
        tab_y = np.array([p[1] for p in comp.breakpoints])
        slope = float((tab_y[-1] - tab_y[-2]) / (tab_x[-1] - tab_x[-2]))
    return (float(lin), kind, b0, q0, cA, tab_x, tab_y, slope,
            float(2.0 * br.b2 ** 2), float(env.sigma),
            float(lam_big), float(stable_mass), float(stable_lo), float(mu.alpha),
            atom_sizes, np.asarray(atom_cum, dtype=float), float(var_small))


def _simulate(m: ModelSpec, cfg: SimConfig, k: float | None, path_key: tuple) -> PathRecord:
    validate_model(m)
    streams = _substreams(cfg.seed, path_key)
    env_t, env_z = _env_schedule(m, cfg.T_horizon, streams["env_jumps"])
    env_on = np.ones(env_t.shape[0], dtype=np.bool_) if k is None else env_z <= k
    rec = _record_times(cfg.T_horizon, cfg.record_grid)
    out_t = np.empty(rec.shape[0] + 2)
    out_y = np.empty(rec.shape[0] + 2)
    n_out, status, exploded, tau_K, absorbed, tau_0, n_env, steps, t_end, y_end = _kernel.run_path(
        float(m.y0), float(cfg.dt_max), float(cfg.K_explode), rec,
        *_kernel_args(m, cfg),
        env_t, env_z, env_on,
        streams["branch_diffusion"], streams["env_diffusion"], streams["big_jumps"], streams["small_jumps"],
        out_t, out_y,
    )
    if status == _kernel.UNDERFLOW:
        raise StepUnderflow(t_end, y_end, cfg.dt_max)
    seen_t, seen_z, seen_on = env_t[:n_env], env_z[:n_env], env_on[:n_env]
    sigma_k = None
    if k is not None:
        dropped = np.nonzero(~env_on)[0]
        sigma_k = float(env_t[dropped[0]]) if dropped.size else None
    rec_obj = PathRecord(
        t=out_t[:n_out].copy(),
        y=out_y[:n_out].copy(),
        exploded=bool(exploded),
        tau_K=float(tau_K) if exploded else None,
        absorbed=bool(absorbed),
        tau_0=float(tau_0) if absorbed else None,
        K_explode=cfg.K_explode,
        env_jump_times=seen_t[seen_on].copy(),
        env_jump_sizes=seen_z[seen_on].copy(),
        n_steps=int(steps),
        truncation_level=k,
        sigma_k=sigma_k,
    )
    rec_obj.tau_hits = {u: hitting_times(rec_obj, u) for u in cfg.hit_levels}
    return rec_obj


def simulate_path(m: ModelSpec, cfg: SimConfig, path_key: tuple = ()) -> PathRecord:
    """One trajectory of the full model on [0, min(T, tau_K)].

    ``path_key`` selects the per-path random substream under ``cfg.seed``.
    """
    return _simulate(m, cfg, None, path_key)


def simulate_truncated(m: ModelSpec, cfg: SimConfig, k: float, path_key: tuple = ()) -> PathRecord:
    """Same dynamics with environment jumps z > k discarded (all negative jumps kept)."""
    if not k >= 2:
        raise ValueError(f"truncation level must be >= 2, got {k}")
    return _simulate(m, cfg, float(k), path_key)
