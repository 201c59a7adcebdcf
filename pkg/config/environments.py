"""
Environment Configuration - Runtime settings per environment
"""

import os
from enum import Enum

from dotenv import load_dotenv

load_dotenv()


class Environment(str, Enum):
    """Environment types"""
    DEVELOPMENT = "development"
    PRODUCTION = "production"
    TESTING = "testing"


class Config:
    """Base configuration"""

    APP_NAME = "pinstt"
    VERSION = "1.0.0"

    # Logging
    LOG_LEVEL = os.getenv("PINSTT_LOG_LEVEL", "INFO")
    LOG_FORMAT = os.getenv("PINSTT_LOG_FORMAT", "json")  # json or text

    # Batch gradient partitioning (results are identical for any value)
    GRADIENT_WORKERS = int(os.getenv("PINSTT_GRADIENT_WORKERS", "1"))

    # Training progress is logged every LOG_EVERY epochs
    LOG_EVERY = int(os.getenv("PINSTT_LOG_EVERY", "1000"))

    OUTPUT_DIR = os.getenv("PINSTT_OUTPUT_DIR", "outputs")


class DevelopmentConfig(Config):
    """Development environment configuration"""

    LOG_LEVEL = os.getenv("PINSTT_LOG_LEVEL", "DEBUG")
    LOG_FORMAT = os.getenv("PINSTT_LOG_FORMAT", "text")
    LOG_EVERY = int(os.getenv("PINSTT_LOG_EVERY", "500"))


class ProductionConfig(Config):
    """Production environment configuration"""

    LOG_LEVEL = os.getenv("PINSTT_LOG_LEVEL", "WARNING")
    GRADIENT_WORKERS = int(os.getenv("PINSTT_GRADIENT_WORKERS", str(os.cpu_count() or 1)))


class TestingConfig(Config):
    """Testing environment configuration"""

    LOG_LEVEL = "WARNING"
    LOG_FORMAT = "text"
    LOG_EVERY = 10 ** 9


config_map = {
    Environment.DEVELOPMENT: DevelopmentConfig,
    Environment.PRODUCTION: ProductionConfig,
    Environment.TESTING: TestingConfig,
}


def get_config() -> Config:
    """Get configuration based on PINSTT_ENV"""
    env = os.getenv("PINSTT_ENV", "production").lower()

    try:
        environment = Environment(env)
    except ValueError:
        environment = Environment.PRODUCTION

    return config_map[environment]()


def validate_config(config: Config) -> list[str]:
    """Return a list of configuration problems (empty when valid)"""
    errors = []

    if config.LOG_FORMAT not in ("json", "text"):
        errors.append(f"LOG_FORMAT must be 'json' or 'text', got {config.LOG_FORMAT!r}")

    if config.GRADIENT_WORKERS < 1:
        errors.append("GRADIENT_WORKERS must be >= 1")

    if config.LOG_EVERY < 1:
        errors.append("LOG_EVERY must be >= 1")

    return errors


current_config = get_config()
