"""Tests for the logging helpers."""

import json
from fractions import Fraction

import pytest
from loguru import logger

from src.encoder.bitstream import RateReport
from src.utils.logger import log_execution_context, log_rate_report, setup_logger


@pytest.fixture
def restore_logger():
    yield
    setup_logger()


class TestLogging:
    def test_jsonl_file_is_structured(self, tmp_path, restore_logger):
        path = tmp_path / "logs" / "run.jsonl"
        setup_logger("INFO", str(path))
        report = RateReport(
            bpp_ssm=Fraction(1, 8), bpp_coarse=Fraction(1, 4), bpp_header=Fraction(1, 8), bpp_total=Fraction(1, 2)
        )
        log_rate_report("img", report)
        logger.remove()

        records = [json.loads(line) for line in path.read_text().splitlines()]
        messages = [r["record"]["message"] for r in records]
        assert any(m.startswith("img: 0.5000 bpp") for m in messages)

    def test_plain_file(self, tmp_path, restore_logger):
        path = tmp_path / "run.log"
        setup_logger("DEBUG", str(path))
        with log_execution_context("unit"):
            pass
        logger.remove()
        text = path.read_text()
        assert "Starting unit" in text and "Completed unit" in text

    def test_failure_is_logged_and_reraised(self, tmp_path, restore_logger):
        path = tmp_path / "run.log"
        setup_logger("INFO", str(path))
        with pytest.raises(RuntimeError):
            with log_execution_context("broken"):
                raise RuntimeError("boom")
        logger.remove()
        assert "Failed broken" in path.read_text()
