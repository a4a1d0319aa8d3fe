# threads.py
import os

THREADS_ENV = "CASTMATCH_THREADS"


def worker_count() -> int:
    """Worker threads allowed inside one stage; `CASTMATCH_THREADS=0` or unset means all cores."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    cores = os.cpu_count() or 1
    if not raw:
        return cores
    try:
        requested = int(raw)
    except ValueError:
        return cores
    if requested <= 0:
        return cores
    return min(requested, cores)
