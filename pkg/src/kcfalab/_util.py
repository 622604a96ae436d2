"""Internal helpers shared across modules."""

from __future__ import annotations

import sys
import threading
from typing import Any, Callable

# CPython consumes C stack proportional to Python recursion depth, and the
# 8 MB main-thread stack overflows near ~50k frames.  Generated programs
# (circuit compilations, machine reductions) nest thousands of levels deep,
# so every public entry point that recurses over terms runs inside a worker
# thread with a large stack.
_DEEP_STACK_BYTES = 512 * 1024 * 1024
_DEEP_RECURSION_LIMIT = 2_000_000

_local = threading.local()


def deepcall(fn: Callable[..., Any], /, *args: Any, **kwargs: Any) -> Any:
    """Run ``fn(*args, **kwargs)`` on a thread with a very large stack.

    Re-entrant: when already executing on a deep worker the call is made
    directly, so nested public API calls do not stack threads.
    """
    if getattr(_local, "deep", False):
        return fn(*args, **kwargs)

    box: dict[str, Any] = {}

    def run() -> None:
        _local.deep = True
        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(_DEEP_RECURSION_LIMIT)
        try:
            box["value"] = fn(*args, **kwargs)
        except BaseException as exc:  # re-raised on the caller's thread
            box["error"] = exc
        finally:
            sys.setrecursionlimit(old_limit)
            _local.deep = False

    old_size = threading.stack_size(_DEEP_STACK_BYTES)
    try:
        worker = threading.Thread(target=run, name="kcfalab-deep")
    finally:
        threading.stack_size(old_size)
    worker.start()
    worker.join()
    if "error" in box:
        raise box["error"]
    return box["value"]


class Names:
    """Deterministic fresh-name supply for term builders.

    One instance per generated program keeps every binder name unique, which
    the labeled calculus requires.
    """

    def __init__(self, prefix: str = "") -> None:
        self.prefix = prefix
        self._n = 0

    def fresh(self, base: str) -> str:
        self._n += 1
        return f"{self.prefix}{base}{self._n}"
