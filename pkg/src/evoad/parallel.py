"""Deterministic parallel evaluation of independent tasks.

A WorkerPool maps small task tuples over a process pool.  The heavy,
read-only payload (training windows, fitness closures) travels once per
worker through the pool initializer instead of once per task, and results
come back in task order, so outcomes never depend on scheduling.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Sequence

import numpy as np

_CONTEXT: Any = None


def _init_worker(context: Any) -> None:
    global _CONTEXT
    _CONTEXT = context


def _run_task(task: Any) -> Any:
    return _CONTEXT.run(task)


def evaluation_seed(base_seed: int, generation: int, index: int) -> int:
    """Stable per-evaluation seed keyed by (generation, individual index).

    Scheduling order can never perturb results because every evaluation owns
    its own derived stream.
    """
    ss = np.random.SeedSequence([int(base_seed), int(generation), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def derive_seed(base_seed: int, *keys: int) -> int:
    """Stable seed for a named sub-computation of a run."""
    ss = np.random.SeedSequence([int(base_seed)] + [int(k) for k in keys])
    return int(ss.generate_state(1, np.uint64)[0])


class WorkerPool:
    """Maps tasks over `workers` processes sharing one read-only context.

    The context must expose run(task) and be picklable.  With workers <= 1
    everything executes inline in the caller's process; results are
    identical either way.
    """

    def __init__(self, workers: int, context: Any):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.workers = workers
        self._context = context
        self._executor: ProcessPoolExecutor | None = None
        if workers > 1:
            self._executor = ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker, initargs=(context,)
            )

    def map(self, tasks: Sequence[Any]) -> list[Any]:
        if self._executor is None:
            return [self._context.run(task) for task in tasks]
        return list(self._executor.map(_run_task, tasks))

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
