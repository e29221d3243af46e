"""Shared PASS/FAIL record for the acceptance suite, printed at session end."""

import contextlib
import time

RESULTS: dict[int, str] = {}


@contextlib.contextmanager
def criterion(number: int, title: str):
    start = time.perf_counter()
    notes: list[str] = []
    try:
        yield notes
    except BaseException as exc:
        RESULTS[number] = f"criterion {number} FAIL  {title}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        raise
    detail = "; ".join(notes) if notes else f"{time.perf_counter() - start:.1f}s"
    RESULTS[number] = f"criterion {number} PASS  {title} ({detail})"
