"""Run configuration: TOML or JSON files with a flat key set per block.

See the README for the key reference. Parsing returns validated specs or
raises :class:`ValidationError` whose fields are prefixed with the block
name (``model.alpha``, ``sim.dt_max``).
"""
from __future__ import annotations

import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import (
    BranchingSpec,
    EnvironmentSpec,
    EnvJump,
    ModelSpec,
    PointMass,
    PowerLaw,
    PureStable,
    StableTailPlusFinite,
    Tabulated,
    TwoSidedExponential,
    Uniform,
    ValidationError,
    validate_model,
)
from .simulate import SimConfig

__all__ = [
    "RunConfig",
    "LyapunovConfig",
    "MCConfig",
    "PhaseConfig",
    "OutputConfig",
    "load_config",
    "parse_config",
    "model_from_dict",
    "model_to_dict",
    "sim_from_dict",
]

SEED_ENV = "CBLE_SEED"

MODEL_KEYS = {
    "y0", "b1", "b2", "mu", "a_bar", "alpha", "mu_A", "mu_atoms",
    "beta", "sigma", "env_jumps", "competition", "b0", "q0", "comp_A", "breakpoints",
}


@dataclass(frozen=True)
class LyapunovConfig:
    delta_grid: tuple = (0.05, 0.1, 0.2)
    y_min: float = 1e-2
    y_max: float = 1e6
    d0: float = 1.0
    n: int = 9
    k: float = 10.0


@dataclass(frozen=True)
class MCConfig:
    paths: int = 100
    threads: int = 1


@dataclass(frozen=True)
class PhaseConfig:
    axis1: str = "b0"
    values1: tuple = ()
    axis2: str = "q0"
    values2: tuple = ()
    n_per_cell: int = 100


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    csv: bool = True
    json: bool = True


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    sim: SimConfig = field(default_factory=SimConfig)
    lyapunov: LyapunovConfig = field(default_factory=LyapunovConfig)
    mc: MCConfig = field(default_factory=MCConfig)
    phase: PhaseConfig = field(default_factory=PhaseConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


def _prefixed(exc: ValidationError, block: str) -> ValidationError:
    return ValidationError([(f"{block}.{f}", r) for f, r in exc.errors])


def _num(d: dict, key: str, default, errs, block="model"):
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errs.append((f"{block}.{key}", f"must be a number, got {v!r}"))
        return math.nan
    return float(v)


def _env_jump(i: int, d: dict, errs) -> EnvJump | None:
    where = f"model.env_jumps[{i}]"
    if not isinstance(d, dict):
        errs.append((where, "must be a table"))
        return None
    law = d.get("law", "point")
    rate = d.get("rate", 0.0)
    try:
        if law == "point":
            j = EnvJump(float(rate), PointMass(float(d["z"])))
        elif law == "uniform":
            j = EnvJump(float(rate), Uniform(float(d["lo"]), float(d["hi"])))
        elif law == "two_sided_exp":
            j = EnvJump(float(rate), TwoSidedExponential(float(d["p_up"]), float(d["eta_up"]), float(d["eta_down"])))
        else:
            errs.append((f"{where}.law", f"unknown law {law!r}; use point, uniform or two_sided_exp"))
            return None
    except KeyError as exc:
        errs.append((where, f"missing key {exc.args[0]!r} for law {law!r}"))
        return None
    except (TypeError, ValueError) as exc:
        errs.append((where, str(exc)))
        return None
    return j


def model_from_dict(d: dict) -> ModelSpec:
    """Build and validate a :class:`ModelSpec` from the flat ``[model]`` keys."""
    errs: list[tuple[str, str]] = []
    unknown = sorted(set(d) - MODEL_KEYS)
    for k in unknown:
        errs.append((f"model.{k}", "unknown key"))
    mu_kind = d.get("mu", "stable")
    a_bar = _num(d, "a_bar", 1.0, errs)
    alpha = _num(d, "alpha", 0.5, errs)
    if mu_kind == "stable":
        mu = PureStable(a_bar, alpha)
    elif mu_kind == "stable_tail":
        atoms = d.get("mu_atoms", [])
        try:
            mu = StableTailPlusFinite(a_bar, alpha, _num(d, "mu_A", 1.0, errs), tuple(tuple(a) for a in atoms))
        except (TypeError, ValueError):
            errs.append(("model.mu_atoms", "must be a list of [mass, size] pairs"))
            mu = PureStable(a_bar, alpha)
    else:
        errs.append(("model.mu", f"unknown jump measure {mu_kind!r}; use stable or stable_tail"))
        mu = PureStable(a_bar, alpha)
    branching = BranchingSpec(_num(d, "b1", 0.0, errs), _num(d, "b2", 0.0, errs), mu)

    jumps = d.get("env_jumps", [])
    if not isinstance(jumps, list):
        errs.append(("model.env_jumps", "must be a list of tables"))
        jumps = []
    nu = tuple(j for j in (_env_jump(i, x, errs) for i, x in enumerate(jumps)) if j is not None)
    env = EnvironmentSpec(_num(d, "beta", 0.0, errs), _num(d, "sigma", 0.0, errs), nu)

    kind = d.get("competition", "power")
    if kind == "power":
        comp = PowerLaw(_num(d, "b0", 0.0, errs), _num(d, "q0", 1.0, errs), _num(d, "comp_A", 0.0, errs))
    elif kind == "tabulated":
        try:
            comp = Tabulated(tuple(tuple(p) for p in d["breakpoints"]))
        except (KeyError, TypeError, ValueError):
            errs.append(("model.breakpoints", "tabulated competition needs a list of [y, b0(y)] pairs"))
            comp = PowerLaw(0.0, 1.0, 0.0)
    else:
        errs.append(("model.competition", f"unknown competition {kind!r}; use power or tabulated"))
        comp = PowerLaw(0.0, 1.0, 0.0)

    m = ModelSpec(branching, env, comp, _num(d, "y0", 1.0, errs))
    if errs:
        raise ValidationError(errs)
    try:
        return validate_model(m)
    except ValidationError as exc:
        raise _prefixed(exc, "model") from None


def _law_to_dict(law) -> dict:
    if isinstance(law, PointMass):
        return {"law": "point", "z": law.z}
    if isinstance(law, Uniform):
        return {"law": "uniform", "lo": law.lo, "hi": law.hi}
    return {"law": "two_sided_exp", "p_up": law.p_up, "eta_up": law.eta_up, "eta_down": law.eta_down}


def model_to_dict(m: ModelSpec) -> dict:
    """Inverse of :func:`model_from_dict`."""
    mu = m.branching.mu
    d = {"y0": m.y0, "b1": m.branching.b1, "b2": m.branching.b2, "a_bar": mu.a_bar, "alpha": mu.alpha}
    if isinstance(mu, StableTailPlusFinite):
        d.update(mu="stable_tail", mu_A=mu.A, mu_atoms=[list(a) for a in mu.inner])
    else:
        d["mu"] = "stable"
    d.update(beta=m.environment.beta, sigma=m.environment.sigma,
             env_jumps=[{"rate": j.rate, **_law_to_dict(j.law)} for j in m.environment.nu])
    c = m.competition
    if isinstance(c, PowerLaw):
        d.update(competition="power", b0=c.b0, q0=c.q0, comp_A=c.A)
    else:
        d.update(competition="tabulated", breakpoints=[list(p) for p in c.breakpoints])
    return d


def _block(raw: dict, name: str, cls, errs, convert=None):
    d = raw.get(name, {})
    if not isinstance(d, dict):
        errs.append((name, "must be a table"))
        return cls()
    names = {f.name for f in fields(cls)}
    for k in sorted(set(d) - names):
        errs.append((f"{name}.{k}", "unknown key"))
    kw = {k: v for k, v in d.items() if k in names}
    if convert:
        kw = convert(kw)
    try:
        return cls(**kw)
    except ValidationError as exc:
        errs.extend(_prefixed(exc, name).errors)
    except (TypeError, ValueError) as exc:
        errs.append((name, str(exc)))
    return cls()


def sim_from_dict(d: dict, env: dict | None = None) -> SimConfig:
    """SimConfig from the ``[sim]`` keys; ``CBLE_SEED`` in ``env`` overrides the seed."""
    errs: list[tuple[str, str]] = []
    kw = dict(d)
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            kw["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ValidationError([(SEED_ENV, f"must be an integer, got {env[SEED_ENV]!r}")]) from None
    if "hit_levels" in kw:
        kw["hit_levels"] = tuple(kw["hit_levels"])
    cfg = _block({"sim": kw}, "sim", SimConfig, errs)
    if errs:
        raise ValidationError(errs)
    return cfg


def _tuples(*keys):
    def conv(kw):
        return {k: tuple(v) if k in keys and isinstance(v, list) else v for k, v in kw.items()}
    return conv


def parse_config(raw: dict, env: dict | None = None) -> RunConfig:
    errs: list[tuple[str, str]] = []
    for k in sorted(set(raw) - {"model", "sim", "lyapunov", "mc", "phase", "output"}):
        errs.append((k, "unknown block"))
    model = None
    try:
        model = model_from_dict(raw.get("model", {}))
    except ValidationError as exc:
        errs.extend(exc.errors)
    sim = SimConfig()
    try:
        sim = sim_from_dict(raw.get("sim", {}), env)
    except ValidationError as exc:
        errs.extend(exc.errors)
    lyap = _block(raw, "lyapunov", LyapunovConfig, errs, _tuples("delta_grid"))
    mc = _block(raw, "mc", MCConfig, errs)
    phase = _block(raw, "phase", PhaseConfig, errs, _tuples("values1", "values2"))
    output = _block(raw, "output", OutputConfig, errs)
    if errs:
        raise ValidationError(errs)
    return RunConfig(model, sim, lyap, mc, phase, output)


def load_config(path: str | Path, env: dict | None = None) -> RunConfig:
    """Read a ``.toml`` or ``.json`` config file."""
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix == ".json":
            raw = json.loads(text)
        else:
            raw = tomllib.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError([(f"{path}:{exc.lineno}", exc.msg)]) from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError([(str(path), str(exc))]) from None
    if not isinstance(raw, dict):
        raise ValidationError([(str(path), "top level must be a table")])
    return parse_config(raw, env)
