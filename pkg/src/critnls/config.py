"""Run configuration: a YAML file with ``domain``, ``potential``, ``problem``,
``bubbles``, ``mfg`` and ``outputs`` blocks.

Example::

    domain:   {N: 3, kind: radial-log-spaced, R_max: 40, n: 4096}
    potential: {family: well, depth: 7, radius: 1}
    problem:  {mu: 0.05, seed: 0, solver: {residual_tol: 1.0e-6}}
    outputs:  {directory: out}

Exactly one of ``problem.mu`` and ``problem.rho`` must be given; ``rho`` is
converted with ``mu = rho^(2* - 2)``.  Unknown keys are rejected so typos do
not silently fall back to defaults.
"""
from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .domain import Kind
from .functional import critical_exponent
from .solvers import SolverConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "config_from_dict"]

_DOMAIN_KEYS = {"N", "kind", "R_max", "n", "r_min"}
_POTENTIAL_KEYS = {"family", "depth", "radius", "amplitude", "scale", "core", "path", "tail", "delta", "r",
                   "local_exponent"}
_PROBLEM_KEYS = {"mu", "rho", "seed", "eps", "solver", "E_star"}
_BUBBLE_KEYS = {"R", "eps_list", "p_list", "N_list", "interaction", "sweep_R", "sweep_eps_list", "t_min", "t_max",
                "t_count"}
_MFG_KEYS = {"alpha"}
_OUTPUT_KEYS = {"directory", "formats", "binary"}
_BLOCKS = {"domain": _DOMAIN_KEYS, "potential": _POTENTIAL_KEYS, "problem": _PROBLEM_KEYS,
           "bubbles": _BUBBLE_KEYS, "mfg": _MFG_KEYS, "outputs": _OUTPUT_KEYS}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    domain: dict
    potential: dict
    problem: dict
    bubbles: dict = field(default_factory=dict)
    mfg: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    base: Path = Path(".")

    @property
    def mu(self) -> float:
        return float(self.problem["mu"])

    @property
    def seed(self) -> int:
        return int(self.problem.get("seed", 0))

    @property
    def out_dir(self) -> Path:
        p = Path(self.outputs.get("directory", "out"))
        return p if p.is_absolute() else self.base / p

    def solver_config(self, mu: float | None = None) -> SolverConfig:
        opts = dict(self.problem.get("solver", {}))
        opts["mu"] = self.mu if mu is None else mu
        opts.setdefault("seed", self.seed)
        opts.setdefault("eps", float(self.problem.get("eps", 0.1)))
        return SolverConfig(**opts)

    def resolved(self) -> dict:
        """Plain dict of every block; what reports embed and hash."""
        return {
            "domain": copy.deepcopy(self.domain),
            "potential": copy.deepcopy(self.potential),
            "problem": copy.deepcopy(self.problem),
            "bubbles": copy.deepcopy(self.bubbles),
            "mfg": copy.deepcopy(self.mfg),
            "outputs": {k: v for k, v in self.outputs.items() if k != "directory"},
        }


def _require(block: dict, key: str, where: str):
    if key not in block:
        raise ConfigError(f"{where}.{key} is required")
    return block[key]


def _positive(x, name: str) -> float:
    try:
        x = float(x)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number") from None
    if not x > 0:
        raise ConfigError(f"{name} must be positive")
    return x


def config_from_dict(raw: dict, base: Path | str = ".") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    for name, block in raw.items():
        if name not in _BLOCKS:
            raise ConfigError(f"unknown block {name!r}")
        if not isinstance(block, dict):
            raise ConfigError(f"block {name!r} must be a mapping")
        extra = set(block) - _BLOCKS[name]
        if extra:
            raise ConfigError(f"unknown keys in {name}: {sorted(extra)}")
    base = Path(base)
    dom = dict(_require(raw, "domain", "config"))
    N = int(_require(dom, "N", "domain"))
    if N not in (3, 4, 5):
        raise ConfigError("domain.N must be 3, 4 or 5")
    dom["N"] = N
    try:
        dom["kind"] = Kind(dom.get("kind", Kind.RADIAL_LOG.value)).value
    except ValueError:
        raise ConfigError(f"unknown domain.kind {dom.get('kind')!r}") from None
    dom["R_max"] = _positive(_require(dom, "R_max", "domain"), "domain.R_max")
    dom["n"] = int(_require(dom, "n", "domain"))
    if "r_min" in dom and dom["r_min"] is not None:
        dom["r_min"] = _positive(dom["r_min"], "domain.r_min")

    pot = dict(_require(raw, "potential", "config"))
    if "family" not in pot:
        raise ConfigError("potential.family is required")
    if pot["family"] == "table":
        path = Path(_require(pot, "path", "potential"))
        path = path if path.is_absolute() else (base / path).resolve()
        if not path.exists():
            raise ConfigError(f"potential table {path} does not exist")
        pot["path"] = str(path)
    if "delta" in pot and pot["delta"] is not None:
        pot["delta"] = _positive(pot["delta"], "potential.delta")

    prob = dict(raw.get("problem", {}))
    has_mu, has_rho = prob.get("mu") is not None, prob.get("rho") is not None
    if has_mu == has_rho:
        raise ConfigError("exactly one of problem.mu and problem.rho must be given")
    if has_rho:
        rho = _positive(prob.pop("rho"), "problem.rho")
        prob["mu"] = rho ** (critical_exponent(N) - 2)
        prob["rho"] = rho
    else:
        prob["mu"] = _positive(prob["mu"], "problem.mu")
        prob.pop("rho", None)
    prob["seed"] = int(prob.get("seed", 0))
    solver = dict(prob.get("solver", {}))
    known = {f.name for f in fields(SolverConfig)} - {"mu"}
    bad = set(solver) - known
    if bad:
        raise ConfigError(f"unknown solver options: {sorted(bad)}")
    prob["solver"] = solver

    out = dict(raw.get("outputs", {}))
    cfg = RunConfig(dom, pot, prob, dict(raw.get("bubbles", {})), dict(raw.get("mfg", {})), out, base)
    try:
        cfg.solver_config()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solver options: {exc}") from None
    return cfg


def load_config(path: Path | str) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from None
    return config_from_dict(raw, path.parent)


def ensure_writable(directory: Path) -> None:
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc}") from None
    if not os.access(directory, os.W_OK):
        raise ConfigError(f"output directory {directory} is not writable")
