"""Differential Evolution (rand/1/bin) over a box.

RNG consumption order, fixed so that results never depend on how the
objective is evaluated:

1. initial population, ``NP x D`` uniforms drawn row by row;
2. per generation, for each target ``i`` in order: three donor indices
   (distinct, none equal to ``i``), the forced crossover index, then ``D``
   crossover uniforms.

All trial vectors of a generation are built from the population as it stood
at the start of that generation, evaluated, and then selected in one pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, FitError

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class DeConfig:
    bounds: Tuple[Tuple[float, float], ...]
    population_size: Optional[int] = None  # 15 * dimension when None
    scaling_factor: float = 0.8
    crossover_rate: float = 0.9
    max_iterations: int = 100
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        if not self.bounds:
            raise ConfigError("at least one dimension is required")
        for lo, hi in self.bounds:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError(f"invalid bound [{lo}, {hi}]")
        if self.pop_size < 4:
            raise ConfigError("population_size must be >= 4")
        if not 0 < self.scaling_factor <= 2:
            raise ConfigError("scaling_factor must lie in (0, 2]")
        if not 0 <= self.crossover_rate <= 1:
            raise ConfigError("crossover_rate must lie in [0, 1]")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def pop_size(self) -> int:
        return self.population_size if self.population_size is not None else 15 * self.dim

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    def with_(self, **kw) -> "DeConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class DeResult:
    best_point: np.ndarray
    best_fitness: float
    fitness_history: Tuple[float, ...]  # entry 0 is the initial population
    evaluations: int


def _evaluate(objective: Objective, x: np.ndarray) -> float:
    v = float(objective(x.copy()))
    if not math.isfinite(v):
        raise FitError(f"objective returned {v!r} at point {x.tolist()}")
    return v


def init_population(config: DeConfig, rng: np.random.Generator) -> np.ndarray:
    lo, hi = config.lower, config.upper
    return lo + rng.random((config.pop_size, config.dim)) * (hi - lo)


def de_step(
    population: np.ndarray,
    fitnesses: np.ndarray,
    objective: Objective,
    config: DeConfig,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """One generation of mutation, crossover and greedy selection."""
    NP, D = population.shape
    if NP != config.pop_size or D != config.dim:
        raise ConfigError("population shape does not match config")
    lo, hi = config.lower, config.upper
    F, CR = config.scaling_factor, config.crossover_rate
    others = np.arange(NP - 1)
    trials = np.empty_like(population)
    for i in range(NP):
        pick = rng.choice(others, 3, replace=False)
        r1, r2, r3 = np.where(pick >= i, pick + 1, pick)
        mutant = np.clip(population[r1] + F * (population[r2] - population[r3]), lo, hi)
        j_rand = rng.integers(D)
        cross = rng.random(D) < CR
        cross[j_rand] = True
        trials[i] = np.where(cross, mutant, population[i])

    trial_fit = np.array([_evaluate(objective, t) for t in trials])
    better = trial_fit < fitnesses
    new_pop = np.where(better[:, None], trials, population)
    new_fit = np.where(better, trial_fit, fitnesses)
    return new_pop, new_fit


def optimize(objective: Objective, config: DeConfig) -> DeResult:
    """Minimise ``objective`` over ``config.bounds``."""
    rng = np.random.default_rng(config.seed)
    pop = init_population(config, rng)
    fit = np.array([_evaluate(objective, x) for x in pop])
    history: List[float] = [float(fit.min())]
    for _ in range(config.max_iterations):
        pop, fit = de_step(pop, fit, objective, config, rng)
        history.append(float(fit.min()))
    best = int(np.argmin(fit))
    return DeResult(
        best_point=pop[best].copy(),
        best_fitness=float(fit[best]),
        fitness_history=tuple(history),
        evaluations=config.pop_size * (config.max_iterations + 1),
    )
