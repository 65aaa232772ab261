"""Seeds, run manifests and timing helpers shared by the harness."""

import json
import logging
import os
import time
from functools import wraps
from typing import Any, Callable, Dict, List, Optional, TypeVar

import numba
import numpy as np
import pandas as pd
import scipy

from sgflow import __version__

logger = logging.getLogger("Utils")


# Type variable for decorator
F = TypeVar("F", bound=Callable[..., Any])

SEED_POLICY = "SeedSequence(master, spawn_key=(index,)).generate_state(1, uint64)"

_TIMINGS: Dict[str, float] = {}


def path_seed(master: int, index: int) -> int:
    """
    Derive the seed of path ``index`` from the master seed.

    The split is counter based: the result depends only on (master, index), so
    any assignment of paths to workers sees the same seeds.

    Parameters
    ----------
    master : int
        64-bit master seed.
    index : int
        Path index.

    Returns
    -------
    int
        64-bit path seed.

    Examples
    --------
    >>> path_seed(1, 0) == path_seed(1, 0)
    True
    """
    if master < 0 or index < 0:
        raise ValueError(f"Seeds must be nonnegative, got master={master}, index={index}.")
    seq = np.random.SeedSequence(master, spawn_key=(index,))
    return int(seq.generate_state(1, np.uint64)[0])


def seed_block(master: int, n: int, offset: int = 0) -> List[int]:
    """Seeds of paths offset, ..., offset + n - 1."""
    return [path_seed(master, offset + i) for i in range(n)]


def timed(phase: str) -> Callable[[F], F]:
    """
    Record the wall-clock time of the decorated function under ``phase``.

    Timings accumulate across calls and end up in the run manifest.

    Parameters
    ----------
    phase : str
        Name of the phase.

    Returns
    -------
    Callable[[F], F]
        The decorator.
    """

    def decorator(func: F) -> F:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                elapsed = time.perf_counter() - start
                _TIMINGS[phase] = _TIMINGS.get(phase, 0.0) + elapsed
                logger.debug(f"{phase} took {elapsed:.3f}s")

        return wrapper  # type: ignore

    return decorator


def timings() -> Dict[str, float]:
    """Accumulated timings per phase."""
    return dict(_TIMINGS)


def reset_timings() -> None:
    """Forget all recorded timings."""
    _TIMINGS.clear()


def package_versions() -> Dict[str, str]:
    """Versions of sgflow and its numerical stack."""
    return {
        "sgflow": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "pandas": pd.__version__,
    }


def ensure_outdir(outdir: str) -> str:
    """Create the output directory if needed and return it."""
    os.makedirs(outdir, exist_ok=True)
    return outdir


def write_manifest(
    outdir: str,
    preset: Dict[str, Any],
    master_seed: int,
    command: str,
    extra: Optional[Dict[str, Any]] = None,
) -> str:
    """
    Write ``manifest.json`` describing a run.

    Parameters
    ----------
    outdir : str
        Output directory.
    preset : Dict[str, Any]
        Preset as a dictionary.
    master_seed : int
        Master seed.
    command : str
        Subcommand that produced the run.
    extra : Optional[Dict[str, Any]], optional
        Additional entries, by default None.

    Returns
    -------
    str
        Path of the manifest.
    """
    manifest = {
        "command": command,
        "preset": preset,
        "master_seed": master_seed,
        "seed_policy": SEED_POLICY,
        "versions": package_versions(),
        "timings": timings(),
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(ensure_outdir(outdir), "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=4)
    logger.info(f"Wrote manifest to {path}")
    return path
