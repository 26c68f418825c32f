"""
Runtime settings.

Values come from the environment (a local .env file is honoured) and are
read once per process.
"""
import os
from dataclasses import dataclass
from functools import lru_cache

from dotenv import load_dotenv

from aitrand.core.exceptions import ConfigError

load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class Settings:
    jobs: int = 1
    log_level: str = "INFO"
    carmichael_max_bound: int = 10**9
    carmichael_segment: int = 1 << 20
    long_run_bits: int = 1 << 28


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings(
        jobs=max(1, _env_int("AITRAND_JOBS", 1)),
        log_level=os.getenv("AITRAND_LOG_LEVEL", "INFO").upper(),
        carmichael_max_bound=_env_int("AITRAND_CARMICHAEL_MAX_BOUND", 10**9),
        carmichael_segment=_env_int("AITRAND_CARMICHAEL_SEGMENT", 1 << 20),
        long_run_bits=_env_int("AITRAND_LONG_RUN_BITS", 1 << 28),
    )
