"""Configuration management for the conflict generalisation toolkit."""

import os
from dotenv import load_dotenv

BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
load_dotenv(os.path.join(BASE_DIR, ".env"))


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


class Config:
    """Configuration class for solver, learning and benchmark settings."""

    # Grounding
    GROUNDING_CAP = int(os.getenv("GROUNDING_CAP", "5000000"))

    # Search
    NUM_ANSWER_SETS = int(os.getenv("NUM_ANSWER_SETS", "10"))
    ACTIVITY_DECAY = float(os.getenv("ACTIVITY_DECAY", "0.95"))
    SIGN_PREFERENCE = os.getenv("SIGN_PREFERENCE", "F").strip().upper()
    LUBY_UNIT = int(os.getenv("LUBY_UNIT", "100"))

    # Conflict generalisation
    RESOLUTION_LOOKBACK = int(os.getenv("RESOLUTION_LOOKBACK", "1"))
    GENERALISATION_STEP_BUDGET = int(os.getenv("GENERALISATION_STEP_BUDGET", "10000"))
    TOP_K = int(os.getenv("TOP_K", "5"))

    # Reduction and oracle
    ORACLE_ATOM_CAP = int(os.getenv("ORACLE_ATOM_CAP", "24"))
    SKOLEM_EXTRA_CONSTANTS = int(os.getenv("SKOLEM_EXTRA_CONSTANTS", "2"))
    REDUCTION_CONFLICT_BUDGET = int(os.getenv("REDUCTION_CONFLICT_BUDGET", "20000"))

    # Benchmarks
    BENCH_WORKERS = int(os.getenv("BENCH_WORKERS", "1"))

    # Diagnostics
    CHECK_INVARIANTS = _env_bool("CHECK_INVARIANTS", "false")
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").strip().upper()

    # Paths
    BASE_DIR = BASE_DIR
    DATA_DIR = os.path.join(BASE_DIR, "data")
    ENCODINGS_DIR = os.path.join(DATA_DIR, "encodings")
    INSTANCES_DIR = os.path.join(DATA_DIR, "instances")
    RESULTS_DIR = os.path.join(DATA_DIR, "results")

    @classmethod
    def validate(cls) -> bool:
        """Validate numeric settings; warn and return False on bad values."""
        from utils.log import get_logger
        logger = get_logger(__name__)

        problems = []
        if cls.GROUNDING_CAP <= 0:
            problems.append("GROUNDING_CAP must be positive")
        if cls.ORACLE_ATOM_CAP <= 0:
            problems.append("ORACLE_ATOM_CAP must be positive")
        if cls.RESOLUTION_LOOKBACK < 1:
            problems.append("RESOLUTION_LOOKBACK must be at least 1")
        if not 0.0 < cls.ACTIVITY_DECAY <= 1.0:
            problems.append("ACTIVITY_DECAY must lie in (0, 1]")
        if cls.SIGN_PREFERENCE not in ("T", "F"):
            problems.append("SIGN_PREFERENCE must be T or F")
        if cls.NUM_ANSWER_SETS < 0:
            problems.append("NUM_ANSWER_SETS must not be negative")

        for problem in problems:
            logger.warning("Invalid configuration: %s", problem)
        return not problems

    @classmethod
    def encoding_path(cls, name: str) -> str:
        """Path of a bundled encoding, e.g. ``house.asp``."""
        return os.path.join(cls.ENCODINGS_DIR, name)


# Create directories if they don't exist
for directory in [Config.DATA_DIR, Config.ENCODINGS_DIR,
                  Config.INSTANCES_DIR, Config.RESULTS_DIR]:
    os.makedirs(directory, exist_ok=True)
