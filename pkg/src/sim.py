"""
Monte Carlo Oracle

Success rates of every method under the null, with the original p-value
fixed (conditional Type-I error) and under the alternative (project power),
plus the rejection rate of the two-stage sequential procedure.

Draws come in fixed-size blocks from numpy's counter-based Philox
generator: the key is the seed and the block index sits in the top counter
word, so block i is reproducible on its own. Workers only decide which
thread evaluates a block; the summed integer counts do not depend on them.
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Optional, Union
import json
import logging
import math

import numpy as np
from pydantic import TypeAdapter, ValidationError

from .combine import P_CEIL, P_FLOOR, combined_pvalues
from .errors import UsageError
from .pydantic_models import (
    AlternativeTruth,
    AnySimConfig,
    ConditionalTruth,
    Method,
    NullTruth,
    SequentialSimConfig,
    SimConfig,
    SimResult,
)
from .sequential import spending_plan
from .specfun import norm_quantile, norm_sf

logger = logging.getLogger(__name__)

BLOCK_SIZE = 1 << 16

_config_adapter = TypeAdapter(AnySimConfig)


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent generator for one block of draws."""
    counter = np.array([0, 0, 0, block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter))


def _uniforms(rng: np.random.Generator, shape) -> np.ndarray:
    return np.clip(rng.random(shape), P_FLOOR, P_CEIL)


def _run_blocks(n_sim: int, count_block: Callable[[int, int], int], workers: int) -> int:
    n_blocks = math.ceil(n_sim / BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, n_sim - i * BLOCK_SIZE) for i in range(n_blocks)]

    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(count_block, range(n_blocks), sizes))
    else:
        counts = [count_block(i, size) for i, size in enumerate(sizes)]
    return int(sum(counts))


def _result(successes: int, n_sim: int) -> SimResult:
    rate = successes / n_sim
    return SimResult(rate=rate, se=math.sqrt(rate * (1.0 - rate) / n_sim), n_sim=n_sim, successes=successes)


def _meta_c(cfg: SimConfig) -> Optional[float]:
    if cfg.c is not None:
        return cfg.c
    if isinstance(cfg.truth, AlternativeTruth):
        return cfg.truth.c
    return None


def simulate(cfg: SimConfig, workers: int = 1) -> SimResult:
    """
    Success rate of `cfg.method` at overall level alpha^2.

    Raises:
        UsageError: If meta-analysis has no variance ratio to use.
    """
    c = _meta_c(cfg)
    if cfg.method == Method.META_ANALYSIS and c is None:
        raise UsageError("Simulating meta-analysis needs c in the config or an alternative truth")
    level = cfg.alpha * cfg.alpha
    truth = cfg.truth

    def count_block(block: int, size: int) -> int:
        rng = block_generator(cfg.seed, block)
        u = _uniforms(rng, (2, size))
        keep = None
        if isinstance(truth, NullTruth):
            po, pr = u[0], u[1]
        elif isinstance(truth, ConditionalTruth):
            po, pr = np.full(size, truth.po), u[1]
        else:
            z_o = truth.mu + norm_quantile(u[0])
            z_r = truth.d * truth.mu * math.sqrt(truth.c) + norm_quantile(u[1])
            po = np.clip(norm_sf(z_o), P_FLOOR, P_CEIL)
            pr = np.clip(norm_sf(z_r), P_FLOOR, P_CEIL)
            if truth.truncate_original:
                keep = z_o >= 0.0
        success = combined_pvalues(cfg.method, po, pr, weights=cfg.weights, c=c) <= level
        if keep is not None:
            success &= keep
        return int(np.count_nonzero(success))

    logger.info(f"Simulating {cfg.method.value} under {truth.kind} truth: n_sim={cfg.n_sim}, seed={cfg.seed}")
    return _result(_run_blocks(cfg.n_sim, count_block, workers), cfg.n_sim)


def simulate_sequential(cfg: SequentialSimConfig, workers: int = 1) -> SimResult:
    """Null rejection rate of the two-stage procedure from uniform triples."""
    plan = spending_plan(cfg.alpha, cfg.gamma)

    def count_block(block: int, size: int) -> int:
        u = _uniforms(block_generator(cfg.seed, block), (3, size))
        e2 = u[0] + u[1]
        stop_success = e2 <= plan.b2
        late_success = (e2 > plan.b2) & (e2 < plan.b3) & (e2 + u[2] <= plan.b3)
        return int(np.count_nonzero(stop_success | late_success))

    logger.info(f"Simulating sequential plan gamma={cfg.gamma}: n_sim={cfg.n_sim}, seed={cfg.seed}")
    return _result(_run_blocks(cfg.n_sim, count_block, workers), cfg.n_sim)


def run_config(cfg: Union[SimConfig, SequentialSimConfig], workers: int = 1) -> SimResult:
    if isinstance(cfg, SequentialSimConfig):
        return simulate_sequential(cfg, workers)
    return simulate(cfg, workers)


def load_sim_config(
    path: Union[str, Path],
    seed: Optional[int] = None,
    n_sim: Optional[int] = None,
    default_seed: Optional[int] = None,
) -> Union[SimConfig, SequentialSimConfig]:
    """
    Read a JSON simulation config.

    `seed` and `n_sim` override the file; `default_seed` applies only when
    neither the file nor `seed` sets one.

    Raises:
        UsageError: If the file is missing or invalid.
    """
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"Simulation config not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise UsageError(f"Simulation config {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise UsageError(f"Simulation config {path} must be a JSON object")

    if seed is not None:
        data["seed"] = seed
    elif "seed" not in data and default_seed is not None:
        data["seed"] = default_seed
    if n_sim is not None:
        data["n_sim"] = n_sim
    data.setdefault("kind", "two-study")

    try:
        return _config_adapter.validate_python(data)
    except ValidationError as e:
        raise UsageError(f"Invalid simulation config {path}: {e}") from e
