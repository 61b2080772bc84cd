import os
from pathlib import Path

DEFAULT_THREADS = 1
DEFAULT_MAX_DEN = 100_000
DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_C = 1024


def load_env(env_path: str | None) -> None:
    """Populate os.environ from a .env file without overriding exported values."""
    if not env_path:
        return

    path = Path(env_path)
    if not path.is_file():
        return

    for line in path.read_text().splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or "=" not in stripped:
            continue

        key, value = stripped.split("=", 1)
        key = key.strip().removeprefix("export ").strip()
        value = value.strip()
        if not key:
            continue

        if len(value) >= 2 and value[0] == value[-1] and value[0] in {'"', "'"}:
            value = value[1:-1]

        os.environ.setdefault(key, value)


def env_int(var_name: str, default: int, *, minimum: int = 1) -> int:
    try:
        value = int(os.getenv(var_name, str(default)))
    except ValueError:
        return default
    return max(minimum, value)


def env_float(var_name: str, default: float) -> float:
    try:
        value = float(os.getenv(var_name, str(default)))
    except ValueError:
        return default
    return value if value > 0 else default


def default_threads() -> int:
    return env_int("WEILREP_THREADS", DEFAULT_THREADS)


def default_max_den() -> int:
    return env_int("WEILREP_MAX_DEN", DEFAULT_MAX_DEN)


def default_tolerance() -> float:
    return env_float("WEILREP_TOLERANCE", DEFAULT_TOLERANCE)


def default_max_c() -> int:
    return env_int("WEILREP_MAX_C", DEFAULT_MAX_C)
