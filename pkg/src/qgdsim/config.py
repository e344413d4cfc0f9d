"""Run configuration documents and the figure presets."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .io import model_from_dict, reference_system_dict, read_json, system_from_dict
from .qgd import QgdConfig

TASKS = ("ness", "linsolve", "matvec", "verify-lcu", "estimate", "baseline")
PRESETS = ("fig3a", "fig3b", "fig4")
CONVENTION_ALIASES = {"standard": "standard", "paper-literal": "paper_literal",
                      "paper_literal": "paper_literal"}


@dataclass
class ExperimentConfig:
    task: str
    model: Optional[dict] = None
    system: Optional[dict] = None
    gamma: float = 0.5
    max_iters: int = 1000
    tolerance: float = 1e-3
    noise_v0: float = 0.0
    rng_seed: int = 0
    divergence_factor: float = 1e6
    early_stop: bool = True
    stop_on_divergence: bool = True
    observables: list = field(default_factory=list)
    output: str = "out"
    convention: str = "standard"
    lcu_steps: int = 3
    baseline: str = "dvqe"
    baseline_steps: int = 500
    eta: float = 0.2
    epsilon: float = 0.05
    delta: float = 0.01
    zeta: str = "1"
    protocol: str = "hadamard"
    trials: int = 1

    def qgd_config(self) -> QgdConfig:
        return QgdConfig(self.max_iters, self.tolerance, self.noise_v0, self.rng_seed,
                         self.divergence_factor, self.early_stop, self.stop_on_divergence)


FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
NEEDS_MODEL = {"ness", "verify-lcu", "estimate"}
NEEDS_SYSTEM = {"linsolve", "matvec"}


def _resolve(value, base: Path, what: str):
    """Inline mapping or a path (relative to the config file) to a JSON document."""
    if value is None or isinstance(value, dict):
        return value
    if isinstance(value, str):
        return read_json((base / value) if not Path(value).is_absolute() else Path(value))
    raise ConfigError(f"{what} must be a mapping or a file path")


def config_from_dict(doc: dict, base: Path = Path(".")) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - set(FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "task" not in doc:
        raise ConfigError("config needs a task")
    values = dict(doc)
    values["model"] = _resolve(values.get("model"), base, "model")
    values["system"] = _resolve(values.get("system"), base, "system")
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig):
    if cfg.task not in TASKS:
        raise ConfigError(f"unknown task {cfg.task!r}")
    if cfg.convention not in CONVENTION_ALIASES:
        raise ConfigError(f"unknown convention {cfg.convention!r}")
    cfg.convention = CONVENTION_ALIASES[cfg.convention]
    for name in ("gamma", "tolerance", "eta", "epsilon"):
        if not float(getattr(cfg, name)) > 0:
            raise ConfigError(f"{name} must be positive")
    if not 0 < cfg.delta < 1:
        raise ConfigError("delta must lie in (0, 1)")
    if cfg.zeta not in ("1", "i"):
        raise ConfigError("zeta must be '1' or 'i'")
    if cfg.protocol not in ("hadamard", "strategy1", "strategy2"):
        raise ConfigError(f"unknown protocol {cfg.protocol!r}")
    if cfg.baseline not in ("dvqe", "vqe"):
        raise ConfigError(f"unknown baseline {cfg.baseline!r}")
    for name in ("max_iters", "lcu_steps", "baseline_steps", "trials"):
        if int(getattr(cfg, name)) != getattr(cfg, name) or getattr(cfg, name) < 0:
            raise ConfigError(f"{name} must be a non-negative integer")
    try:
        cfg.qgd_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not isinstance(cfg.observables, list) or not all(isinstance(o, str) for o in cfg.observables):
        raise ConfigError("observables must be a list of Pauli strings")
    needs_model = cfg.task in NEEDS_MODEL or (cfg.task == "baseline" and cfg.baseline == "dvqe")
    needs_system = cfg.task in NEEDS_SYSTEM or (cfg.task == "baseline" and cfg.baseline == "vqe")
    if needs_model:
        if cfg.model is None:
            raise ConfigError(f"task {cfg.task} needs a model")
        model = model_from_dict(cfg.model)  # raises on schema problems
        for o in cfg.observables:
            if len(o) != model.n_sites or set(o.upper()) - set("IXYZ"):
                raise ConfigError(f"observable {o!r} does not fit {model.n_sites} sites")
    if needs_system:
        if cfg.system is None:
            raise ConfigError(f"task {cfg.task} needs a system")
        system_from_dict(cfg.system)


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    return config_from_dict(read_json(path), path.parent)


def serialize(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


# presets ---------------------------------------------------------------------

ISING2 = {"ising": {"n": 2, "J": 1.0, "h": 1.0, "mu": [0.1, 0.1]}}


@dataclass(frozen=True)
class Preset:
    name: str
    gammas: tuple
    noise_levels: tuple
    iterations: int
    seed: int
    tolerance: float
    probe_gamma: Optional[float] = None
    baseline_steps: int = 0
    baseline_eta: float = 0.2


PRESET_TABLE = {
    "fig3a": Preset("fig3a", (0.5,), (0.0, 0.05, 0.1), 500, 0, 1e-2, None, 500, 0.2),
    "fig3b": Preset("fig3b", (0.1, 0.3, 0.5, 1.0, 1.7), (0.0,), 500, 0, 1e-2, 2.0),
    "fig4": Preset("fig4", (0.3,), (0.0,), 20, 0, 1e-6, None, 200, 0.1),
}


def preset(name: str) -> Preset:
    if name not in PRESET_TABLE:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESET_TABLE)}")
    return PRESET_TABLE[name]


def preset_configs(name: str, seed: Optional[int] = None) -> list:
    """Expand a preset into one config per sub-case."""
    p = preset(name)
    seed = p.seed if seed is None else seed
    out = []
    if name in ("fig3a", "fig3b"):
        for gamma in p.gammas:
            for v0 in p.noise_levels:
                out.append(ExperimentConfig(
                    task="ness", model=ISING2, gamma=gamma, max_iters=p.iterations,
                    tolerance=p.tolerance, noise_v0=v0, rng_seed=seed, early_stop=False,
                    stop_on_divergence=False, observables=["ZI", "XI", "ZZ"]))
        if p.probe_gamma is not None:
            out.append(ExperimentConfig(
                task="ness", model=ISING2, gamma=p.probe_gamma, max_iters=p.iterations,
                tolerance=p.tolerance, rng_seed=seed, early_stop=False,
                stop_on_divergence=False))
        if p.baseline_steps:
            out.append(ExperimentConfig(
                task="baseline", model=ISING2, baseline="dvqe", baseline_steps=p.baseline_steps,
                eta=p.baseline_eta, rng_seed=seed))
    else:
        out.append(ExperimentConfig(
            task="linsolve", system=reference_system_dict(), gamma=p.gammas[0],
            max_iters=p.iterations, tolerance=p.tolerance, rng_seed=seed, early_stop=False))
        out.append(ExperimentConfig(
            task="baseline", system=reference_system_dict(), baseline="vqe",
            baseline_steps=p.baseline_steps, eta=p.baseline_eta, rng_seed=seed))
    for c in out:
        validate(c)
    return out
