"""Round-sampling backends.

The per-round postselected probe update is the hot inner loop of every
sampled attack run, so it is implemented twice: a compiled Cython kernel
(_crounds) and a pure-Python fallback (_pyrounds) with an identical
contract. The compiled kernel is used when available; set the environment
variable WIESNERLAB_ROUNDS=python (or =cython) to force a backend.

benchmarks/bench_rounds.py compares the two.
"""

import os

_forced = os.environ.get("WIESNERLAB_ROUNDS", "").strip().lower()

if _forced in ("python", "py"):
    from ._pyrounds import sample_transfer_rounds
    BACKEND = "python"
elif _forced in ("", "cython", "c"):
    try:
        from ._crounds import sample_transfer_rounds
        BACKEND = "cython"
    except ImportError:
        if _forced:
            raise
        from ._pyrounds import sample_transfer_rounds
        BACKEND = "python"
else:
    raise ImportError(f"unknown WIESNERLAB_ROUNDS backend {_forced!r}")


def get_backend(name: str):
    """Return a specific backend module ('python' or 'cython'), for benchmarks."""
    if name == "python":
        from . import _pyrounds
        return _pyrounds
    if name == "cython":
        from . import _crounds
        return _crounds
    raise ValueError(f"unknown backend {name!r}")


__all__ = ["sample_transfer_rounds", "BACKEND", "get_backend"]
