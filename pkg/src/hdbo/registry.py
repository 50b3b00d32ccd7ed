"""Name -> solver table used by the harness and the CLI.

Each solver's defaults are a dict of config sections (``gp``, ``acq``,
``embedding``, ``turbo``, ``cmaes``) built for a given dimension. Overrides
use the same shape, e.g. ``{"gp": {"fit_restarts": 1}}``, and replace
individual fields of the default section.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Optional

from .acquisition import AcqConfig
from .cmaes import CmaesConfig, run_cmaes
from .embedding import KERNEL_PCA, LINEAR_PCA, EmbeddingConfig, run_embedding_bo
from .runs import Archive, Observer, RunConfig
from .surrogate import GpConfig
from .turbo import TurboConfig, default_gp_config, run_turbo
from .vanilla import BOX, run_vanilla_bo

Overrides = Mapping[str, Mapping[str, Any]]


@dataclass(frozen=True)
class Capabilities:
    batched: bool = False
    embedding: bool = False
    surrogate_timed: bool = True


@dataclass(frozen=True)
class SolverSpec:
    name: str
    defaults: Callable[[int], dict]
    runner: Callable[[RunConfig, dict, Optional[Observer]], Archive]
    capabilities: Capabilities = Capabilities()

    def default_config(self, dim: int) -> dict:
        return self.defaults(dim)


def _bo_defaults(dim):
    return {"gp": GpConfig(), "acq": AcqConfig(bounds=BOX)}


def _embedding_defaults(kind):
    def build(dim):
        return {"gp": GpConfig(), "acq": AcqConfig(bounds=BOX), "embedding": EmbeddingConfig(kind=kind)}
    return build


def _turbo_defaults(multi):
    def build(dim):
        tc = TurboConfig.turbom(dim) if multi else TurboConfig.turbo1(dim)
        return {"gp": default_gp_config(tc), "turbo": tc}
    return build


def _cmaes_defaults(dim):
    return {"cmaes": CmaesConfig(population_size=None)}


_SOLVERS = (
    SolverSpec("bo", _bo_defaults,
               lambda rc, c, obs: run_vanilla_bo(rc, c["gp"], c["acq"], obs)),
    SolverSpec("pca-bo", _embedding_defaults(LINEAR_PCA),
               lambda rc, c, obs: run_embedding_bo(rc, c["embedding"], c["gp"], c["acq"], obs),
               Capabilities(embedding=True)),
    SolverSpec("kpca-bo", _embedding_defaults(KERNEL_PCA),
               lambda rc, c, obs: run_embedding_bo(rc, c["embedding"], c["gp"], c["acq"], obs),
               Capabilities(embedding=True)),
    SolverSpec("turbo1", _turbo_defaults(False),
               lambda rc, c, obs: run_turbo(rc, c["turbo"], c["gp"], obs),
               Capabilities(batched=True)),
    SolverSpec("turbom", _turbo_defaults(True),
               lambda rc, c, obs: run_turbo(rc, c["turbo"], c["gp"], obs),
               Capabilities(batched=True)),
    SolverSpec("cmaes", _cmaes_defaults,
               lambda rc, c, obs: run_cmaes(rc, c["cmaes"], obs),
               Capabilities(surrogate_timed=False)),
)
_BY_NAME = {s.name: s for s in _SOLVERS}


def list_solvers() -> list[SolverSpec]:
    return list(_SOLVERS)


def solver_names() -> list[str]:
    return [s.name for s in _SOLVERS]


def get_solver(name: str) -> SolverSpec:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise LookupError(f"unknown solver {name!r}; valid names: {', '.join(solver_names())}") from None


def resolve_config(name: str, dim: int, overrides: Optional[Overrides] = None) -> dict:
    """Solver defaults at ``dim`` with per-section field overrides applied."""
    config = get_solver(name).default_config(dim)
    for section, fields in (overrides or {}).items():
        if section not in config:
            raise KeyError(f"solver {name!r} has no config section {section!r}; sections: {sorted(config)}")
        fields = dict(fields)
        for k in ("bounds", "lengthscale_bounds", "signal_variance_bounds"):
            if isinstance(fields.get(k), list):
                fields[k] = tuple(fields[k])
        config[section] = dataclasses.replace(config[section], **fields)
    return config


def describe_config(config: dict) -> dict:
    """JSON-friendly view of a resolved config."""
    return {section: dataclasses.asdict(c) for section, c in config.items()}


def dispatch(name: str, run_config: RunConfig, observer: Optional[Observer] = None,
             overrides: Optional[Overrides] = None) -> Archive:
    spec = get_solver(name)
    config = resolve_config(name, run_config.problem.dim, overrides)
    archive = spec.runner(run_config, config, observer)
    archive.meta.setdefault("solver", name)
    return archive
