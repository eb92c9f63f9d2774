from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
import csv
import logging
import os
from time import perf_counter

import numpy as np

from constants import THREADS_ENV

logger = logging.getLogger(__name__)


@contextmanager
def all_logging_disabled(highest_level=logging.CRITICAL):
    """
    A context manager that will prevent any logging messages
    triggered during the body from being processed.
    :param highest_level: the maximum logging level in use.
      This would only need to be changed if a custom level greater than CRITICAL
      is defined.
    """
    # can't get the current module-level override => use an undocumented
    # (but non-private!) interface
    previous_level = logging.root.manager.disable

    logging.disable(highest_level)

    try:
        yield
    finally:
        logging.disable(previous_level)


@contextmanager
def phase_timer(timings, phase):
    """
    Accumulate the wall-clock seconds spent in the body under ``timings[phase]``.

    Parameters
    ----------
    timings : dict
        Mapping phase name -> seconds, updated in place.
    phase : str
        Name of the phase being timed.
    """
    start = perf_counter()
    try:
        yield
    finally:
        timings[phase] = timings.get(phase, 0.0) + perf_counter() - start


def make_rng(seed):
    return np.random.default_rng(seed)


def worker_count(override=None):
    """
    Number of worker threads, capped by the LIEPRUNE_THREADS environment variable.
    """
    if override is not None:
        return max(1, int(override))
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV}={value!r}")
    return os.cpu_count() or 1


def parallel_map(func, items, threads=None):
    """
    Apply ``func`` to every item, preserving input order in the result.

    Runs inline when a single worker is available so that stack traces
    stay readable.
    """
    items = list(items)
    workers = min(worker_count(threads), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _cell(value, float_format):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(value, float_format)
    return value


def write_csv(out, fieldnames, rows, float_format=".12g"):
    """
    Write dict rows under a header line.

    Parameters
    ----------
    out : str, path-like or text stream
        Target file, or an open stream written in place.
    fieldnames : list of str
        Column order; keys outside it are ignored.
    rows : iterable of dict
    float_format : str
        Format spec for float cells. None becomes an empty cell.
    """
    if isinstance(out, (str, os.PathLike)):
        with open(out, "w", newline="") as fh:
            write_csv(fh, fieldnames, rows, float_format)
        return
    writer = csv.DictWriter(out, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row.get(k), float_format) for k in fieldnames})
