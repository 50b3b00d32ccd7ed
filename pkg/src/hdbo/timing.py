"""Process CPU-time measurement of solver phases."""

from __future__ import annotations

import enum
import threading
import time
from typing import Callable, TypeVar

T = TypeVar("T")

_state = threading.local()


class Phase(enum.Enum):
    ModelFit = "model_fit"
    AcqOpt = "acq_opt"


class NestedTimingError(RuntimeError):
    pass


def time_phase(phase: Phase, thunk: Callable[[], T]) -> tuple[T, float]:
    """Run ``thunk`` and return ``(result, cpu_seconds)``. Phases may not nest."""
    if getattr(_state, "active", None) is not None:
        raise NestedTimingError(f"cannot time {phase} inside {_state.active}")
    _state.active = phase
    try:
        start = time.process_time()
        result = thunk()
        return result, time.process_time() - start
    finally:
        _state.active = None
