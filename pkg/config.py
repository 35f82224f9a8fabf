# config.py
"""
Configuration management for the PPICOD toolkit
Loads settings from .env file
"""
import os
import sys
from functools import partial
from pathlib import Path
from dotenv import load_dotenv

# Load .env from project root
env_path = Path(__file__).parent / ".env"
load_dotenv(dotenv_path=env_path)


class Config:
    """Application configuration"""

    # ============ Oracle Budgets ============
    # Upper bound on enumerated objects per oracle search space
    ENUMERATION_BUDGET = int(os.getenv("PPICOD_BUDGET", "10000000"))
    # Witnesses kept per Pareto point in oracle output
    WITNESS_LIMIT = int(os.getenv("PPICOD_WITNESS_LIMIT", "1"))

    # ============ Execution ============
    WORKERS = int(os.getenv("PPICOD_WORKERS", "1"))
    SHOW_PROGRESS = os.getenv("PPICOD_SHOW_PROGRESS", "false").lower() == "true"

    # ============ Application Settings ============
    OUTPUT_DIR = os.getenv("PPICOD_OUTPUT_DIR", "results")
    LOG_FILE = os.getenv("LOG_FILE", "logs/ppicod.log")
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

    @classmethod
    def validate(cls) -> bool:
        """Validate configuration values"""
        problems = []

        if cls.ENUMERATION_BUDGET < 1:
            problems.append(f"PPICOD_BUDGET must be positive (got {cls.ENUMERATION_BUDGET})")

        if cls.WITNESS_LIMIT < 1:
            problems.append(f"PPICOD_WITNESS_LIMIT must be positive (got {cls.WITNESS_LIMIT})")

        if cls.WORKERS < 1:
            problems.append(f"PPICOD_WORKERS must be at least 1 (got {cls.WORKERS})")

        if cls.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            problems.append(f"LOG_LEVEL not recognised: {cls.LOG_LEVEL}")

        if problems:
            raise ValueError(
                "Invalid configuration: " + "; ".join(problems) + "\n"
                "Please check your .env file."
            )

        return True

    @classmethod
    def print_config(cls, stream=None):
        """Print current configuration (for debugging)"""
        out = partial(print, file=stream or sys.stdout)
        out("\n" + "=" * 60)
        out("CONFIGURATION")
        out("=" * 60)

        out("\nOracle:")
        out(f"   Enumeration budget: {cls.ENUMERATION_BUDGET:,}")
        out(f"   Witness limit:      {cls.WITNESS_LIMIT}")

        out("\nExecution:")
        out(f"   Workers:       {cls.WORKERS}")
        out(f"   Progress bars: {cls.SHOW_PROGRESS}")

        out("\nFiles:")
        out(f"   Output dir: {cls.OUTPUT_DIR}")
        out(f"   Log file:   {cls.LOG_FILE} ({cls.LOG_LEVEL})")

        out("=" * 60 + "\n")
