"""Standard BO loop: Latin hypercube DoE, then fit / maximize EI / evaluate until the budget is spent."""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from . import surrogate
from .acquisition import AcqConfig, maximize_acquisition
from .doe import latin_hypercube
from .runs import Archive, Evaluator, Observer, RunConfig
from .surrogate import GpConfig
from .timing import Phase, time_phase

log = logging.getLogger(__name__)

BOX = (-5.0, 5.0)


def _seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**31 - 1))


def run_vanilla_bo(
    config: RunConfig,
    gp_config: Optional[GpConfig] = None,
    acq_config: Optional[AcqConfig] = None,
    observer: Optional[Observer] = None,
) -> Archive:
    gp_config = gp_config or GpConfig()
    acq_config = acq_config or AcqConfig(bounds=BOX)
    rng = np.random.default_rng(config.seed)
    evaluate = Evaluator(config, observer)
    dim = config.problem.dim

    for x in latin_hypercube(config.n0, dim, BOX, _seed(rng)).points:
        evaluate(x)

    warm = None
    archive = evaluate.archive
    while evaluate.remaining > 0:
        fit_seed, acq_seed = _seed(rng), _seed(rng)
        model, fit_s = time_phase(
            Phase.ModelFit,
            lambda: surrogate.fit(archive.X, archive.y, gp_config, fit_seed, bounds=BOX, warm_start=warm),
        )
        warm = model.theta
        x, acq_s = time_phase(
            Phase.AcqOpt, lambda: maximize_acquisition(model, archive.best_y, acq_config, acq_seed)
        )
        duplicate = archive.contains(x)
        if duplicate:
            log.debug("duplicate proposal at evaluation %d, replaced by a uniform point", evaluate.used + 1)
            x = rng.uniform(*BOX, size=dim)
        evaluate(x, fit_s, acq_s, **({"duplicate_replaced": True} if duplicate else {}))
    return archive
