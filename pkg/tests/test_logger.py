"""
Logging, Config and Timing Tests
"""

import json
import logging

import numpy as np

from config.environments import Config, TestingConfig, get_config, validate_config
from utils.logger import JsonFormatter, TextFormatter
from utils.timing import TimerContext, timer


def _record(fields):
    record = logging.LogRecord("pinstt", logging.INFO, __file__, 10, "epoch done", None, None)
    record.fields = fields
    return record


def test_json_formatter_includes_fields():
    """Keyword fields land in the JSON object, arrays as lists"""
    line = JsonFormatter().format(_record({"epoch": 3, "center": np.array([1.0, 2.0])}))
    data = json.loads(line)
    assert data["message"] == "epoch done"
    assert data["level"] == "INFO"
    assert data["epoch"] == 3
    assert data["center"] == [1.0, 2.0]


def test_text_formatter_appends_fields():
    """Text lines carry key=value pairs after the message"""
    line = TextFormatter().format(_record({"loss": 0.5}))
    assert "epoch done" in line
    assert line.endswith("loss=0.5")


def test_testing_environment_selected(monkeypatch):
    """PINSTT_ENV=testing selects the quiet config"""
    monkeypatch.setenv("PINSTT_ENV", "testing")
    assert isinstance(get_config(), TestingConfig)


def test_unknown_environment_falls_back(monkeypatch):
    """Unrecognized environments use production defaults"""
    monkeypatch.setenv("PINSTT_ENV", "staging")
    assert type(get_config()).__name__ == "ProductionConfig"


def test_validate_config_reports_problems():
    """Bad format and worker count are both reported"""

    class Broken(Config):
        LOG_FORMAT = "xml"
        GRADIENT_WORKERS = 0

    problems = validate_config(Broken())
    assert len(problems) == 2
    assert validate_config(TestingConfig()) == []


def test_timer_context_measures():
    """Elapsed time is recorded on exit"""
    with TimerContext("noop") as clock:
        sum(range(1000))
    assert clock.elapsed >= 0.0


def test_timer_decorator_preserves_result():
    """Decorated functions return their value unchanged"""

    @timer("double")
    def double(x):
        return 2 * x

    assert double(4) == 8
    assert double.__name__ == "double"
