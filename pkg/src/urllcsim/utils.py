from __future__ import annotations

import os
import zlib
from collections.abc import Iterable
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Optional, TypeVar

import numpy as np
from loguru import logger
from natsort import natsorted

T = TypeVar("T")
R = TypeVar("R")


def rng_stream(seed: int, label: str, *indices: int) -> np.random.Generator:
    """
    Split the global seed into an independent, named random stream.

    The stream is keyed by `(crc32(label), *indices)`, so realization 17 of the
    Monte Carlo engine draws the same numbers regardless of how many realizations
    ran before it, or on which worker.

    Parameters
    ----------
    seed : int
        Global 64-bit seed.
    label : str
        Stream family, e.g. `"mcsim"`, `"train"`, `"topology"`.
    *indices : int
        Position inside the family (realization, iteration, batch sample...).

    Returns
    -------
    numpy.random.Generator
    """
    key = (zlib.crc32(label.encode("utf-8")), *(int(i) for i in indices))
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def resolve_workers(workers: Optional[int]) -> int:
    """`None` means every available core"""
    if workers is None:
        return max(os.cpu_count() or 1, 1)
    return max(workers, 1)


def parallel_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    workers: Optional[int] = 1,
    on_done: Optional[Callable[[], None]] = None,
) -> list[R]:
    """
    Apply `fn` to every item, in worker processes when `workers > 1`.

    Results come back in input order, so any reduction over them is independent
    of the worker count. `fn` must be picklable (a module level function or a
    `functools.partial` of one).
    """
    todo = list(items)
    count = resolve_workers(workers)
    results: list[R] = []

    if count == 1 or len(todo) <= 1:
        for item in todo:
            results.append(fn(item))
            if on_done is not None:
                on_done()
        return results

    logger.debug(f"Fanning {len(todo)} task(s) out to {count} worker(s)")
    with ProcessPoolExecutor(max_workers=count) as pool:
        for result in pool.map(fn, todo):
            results.append(result)
            if on_done is not None:
                on_done()

    return results


def find_instance_files(path: Path) -> list[Path]:
    """
    A single instance file, or every `*.json` instance below a directory in natural order
    (`instance-2.json` before `instance-10.json`).
    """
    if path.is_file():
        return [path]

    return natsorted(p for p in path.rglob("*.json") if p.is_file())
