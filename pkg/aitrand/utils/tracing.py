import time
import uuid
from contextlib import contextmanager


def generate_trace_id() -> str:
    return uuid.uuid4().hex[:8]


@contextmanager
def timed(logger, label: str):
    start = time.perf_counter()
    yield
    logger.info(f"{label} completed in {time.perf_counter() - start:.2f}s")
