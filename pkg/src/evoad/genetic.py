"""Level-agnostic evolution loop with pluggable operators, fitness, and selection.

Every search level (feature subspaces, model architectures) runs the same
iteration: pair parents, cross over with a per-pair probability, mutate each
offspring with a per-offspring probability, evaluate the offspring, then
hand parents plus offspring to the selection hook, which must return exactly
population_size survivors.  Parents keep their cached fitness, so each
generation costs at most population_size evaluations.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .errors import EvolutionError
from .parallel import WorkerPool, evaluation_seed


@dataclass
class EvolutionConfig:
    population_size: int
    generations: int
    mutation_probability: float
    crossover_probability: float
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        for name in ("mutation_probability", "crossover_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass
class ScoredIndividual:
    solution: Any
    fitness: float


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    wall_seconds: float


@dataclass
class EvolutionResult:
    population: list[ScoredIndividual]
    history: list[GenerationStats]

    @property
    def best(self) -> ScoredIndividual:
        return max(self.population, key=lambda ind: ind.fitness)


@dataclass
class _FitnessContext:
    """Worker-side context: evaluates (solution, seed) tasks with one fitness hook."""

    fitness_fn: Callable[[Any, int], float]

    def run(self, task: tuple[Any, int]) -> float:
        solution, seed = task
        return self.fitness_fn(solution, seed)


def truncation_selector(n_survivors: int) -> Callable[[list[ScoredIndividual]], list[ScoredIndividual]]:
    """Plain elitist truncation: the n_survivors best by fitness, stable on ties."""

    def select(scored: list[ScoredIndividual]) -> list[ScoredIndividual]:
        ranked = sorted(range(len(scored)), key=lambda i: (-scored[i].fitness, i))
        return [scored[i] for i in ranked[:n_survivors]]

    return select


def _evaluate(pool: WorkerPool, solutions: Sequence[Any], generation: int,
              base_seed: int) -> list[float]:
    tasks = [(sol, evaluation_seed(base_seed, generation, i))
             for i, sol in enumerate(solutions)]
    try:
        return pool.map(tasks)
    except EvolutionError:
        raise
    except Exception as exc:  # identify the failing individual serially
        for i, task in enumerate(tasks):
            try:
                pool._context.run(task)
            except Exception as inner:
                raise EvolutionError(str(inner), generation, i) from inner
        raise EvolutionError(str(exc), generation, -1) from exc


def evolve(
    init: Sequence[Any],
    crossover: Callable[..., Any],
    mutate: Callable[..., Any],
    fitness_fn: Callable[[Any, int], float],
    select_fn: Callable[[list[ScoredIndividual]], list[ScoredIndividual]],
    cfg: EvolutionConfig,
    workers: int = 1,
    level: str = "",
    log_path: str | Path | None = None,
) -> EvolutionResult:
    """Run the genetic loop for cfg.generations iterations.

    crossover(s1, s2, rng) may return one child or a pair; mutate(s, rng)
    returns a new solution.  fitness_fn(solution, seed) must be pure and,
    when workers > 1, picklable.  Results are a function of (init, cfg.seed)
    only, independent of worker count.
    """
    if len(init) != cfg.population_size:
        raise ValueError(
            f"initial population size {len(init)} != configured {cfg.population_size}"
        )
    rng = np.random.default_rng(cfg.seed)
    n_pop = cfg.population_size
    history: list[GenerationStats] = []
    log_file = open(log_path, "a", encoding="utf-8") if log_path is not None else None

    try:
        with WorkerPool(workers, _FitnessContext(fitness_fn)) as pool:
            init_fits = _evaluate(pool, init, 0, cfg.seed)
            population = [ScoredIndividual(s, f) for s, f in zip(init, init_fits)]

            for gen in range(1, cfg.generations + 1):
                t0 = time.perf_counter()
                order = rng.permutation(n_pop)
                offspring: list[Any] = []
                for pair_start in range(0, n_pop - 1, 2):
                    p1 = population[order[pair_start]].solution
                    p2 = population[order[pair_start + 1]].solution
                    if rng.random() < cfg.crossover_probability:
                        produced = crossover(p1, p2, rng)
                        if isinstance(produced, tuple):
                            c1, c2 = produced
                        else:
                            c1, c2 = produced, crossover(p2, p1, rng)
                    else:
                        c1, c2 = copy.deepcopy(p1), copy.deepcopy(p2)
                    offspring.extend((c1, c2))
                if n_pop % 2 == 1:
                    offspring.append(copy.deepcopy(population[order[-1]].solution))
                offspring = offspring[:n_pop]
                offspring = [
                    mutate(child, rng) if rng.random() < cfg.mutation_probability else child
                    for child in offspring
                ]

                fits = _evaluate(pool, offspring, gen, cfg.seed)
                scored_offspring = [ScoredIndividual(s, f) for s, f in zip(offspring, fits)]

                population = select_fn(population + scored_offspring)
                if len(population) != n_pop:
                    raise EvolutionError(
                        f"selection returned {len(population)} individuals, expected {n_pop}",
                        gen, -1,
                    )

                fitnesses = [ind.fitness for ind in population]
                stats = GenerationStats(
                    generation=gen,
                    best_fitness=max(fitnesses),
                    mean_fitness=float(np.mean(fitnesses)),
                    wall_seconds=time.perf_counter() - t0,
                )
                history.append(stats)
                if log_file is not None:
                    log_file.write(json.dumps({
                        "level": level,
                        "generation": stats.generation,
                        "best_fitness": stats.best_fitness,
                        "mean_fitness": stats.mean_fitness,
                        "wall_seconds": stats.wall_seconds,
                    }) + "\n")
                    log_file.flush()
    finally:
        if log_file is not None:
            log_file.close()

    return EvolutionResult(population=population, history=history)
