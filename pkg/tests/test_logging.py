"""Tests for logging configuration.

CRITICAL DIRECTIVE: TEST INTEGRITY
===================================
NEVER remove, disable, or work around a failing test without explicit user review and approval.

When a test fails:
1. STOP - Do not proceed with implementation
2. ANALYZE - Understand why the test is failing
3. DISCUSS - Present the failure to the user with exact error, root cause, and proposed solutions
4. WAIT - Get explicit user approval before modifying/removing/skipping the test

Tests are the specification. A failing test means either:
- The implementation is wrong (most common - fix the code)
- The test expectations are wrong (requires user discussion)
- The requirements have changed (requires user approval)
"""

import json
import sys

from fp_spectra import add_file_sink, configure_logging, install_exception_hook
from fp_spectra.field import make_field
from fp_spectra.fset import FpSet
from fp_spectra.spectra import det_spectrum
from loguru import logger


def test_logger_can_be_imported():
    """Test that we can import the logging helpers from fp_spectra."""
    assert configure_logging is not None


def test_exception_hook_logs_uncaught_exceptions(tmp_path):
    """Test that uncaught exceptions are logged."""
    log_file = tmp_path / "test.log"

    logger.remove()
    configure_logging(log_file=str(log_file), level="INFO")
    original_hook = sys.excepthook
    install_exception_hook()

    try:
        try:
            msg = "Test exception"
            raise ValueError(msg)
        except ValueError:
            exc_type, exc_value, exc_traceback = sys.exc_info()
            sys.excepthook(exc_type, exc_value, exc_traceback)
    finally:
        sys.excepthook = original_hook

    log_content = log_file.read_text()

    assert "ValueError" in log_content
    assert "Test exception" in log_content
    assert "Traceback" in log_content or "traceback" in log_content


def test_configure_logging_can_be_called_multiple_times(tmp_path):
    """Test that configure_logging can be called multiple times without error."""
    log_file = tmp_path / "test.log"

    logger.remove()
    configure_logging(log_file=str(log_file), level="INFO")
    configure_logging(log_file=str(log_file), level="DEBUG")

    logger.debug("Test message")
    log_content = log_file.read_text()

    # Should use the latest configuration (DEBUG level)
    assert "Test message" in log_content


def test_spectrum_computation_logs_summary(tmp_path):
    """Test that a spectrum computation reports its result at INFO level."""
    log_file = tmp_path / "spectra.log"

    logger.remove()
    configure_logging(log_file=str(log_file), level="INFO")

    det_spectrum(FpSet.from_residues(make_field(5), [0, 1]), 2)

    log_content = log_file.read_text()
    assert "det spectrum d=2" in log_content
    assert "3 values" in log_content
    assert "exact" in log_content


def test_serialized_file_sink_writes_json_lines(tmp_path):
    """Test that serialize=True writes one JSON record per line."""
    log_file = tmp_path / "scan.jsonl"

    logger.remove()
    configure_logging(log_file=str(log_file), level="INFO", serialize=True)
    logger.info("cell done")

    records = [json.loads(line) for line in log_file.read_text().splitlines()]
    assert records[-1]["record"]["message"] == "cell done"
    assert records[-1]["record"]["level"]["name"] == "INFO"


def test_add_file_sink_returns_removable_handler(tmp_path):
    """Test that the handler id from add_file_sink detaches the file."""
    log_file = tmp_path / "extra.log"

    logger.remove()
    handler_id = add_file_sink(log_file, level="WARNING")
    logger.info("below threshold")
    logger.warning("kept")
    logger.remove(handler_id)
    logger.warning("after removal")

    log_content = log_file.read_text()
    assert "kept" in log_content
    assert "pid " in log_content
    assert "below threshold" not in log_content
    assert "after removal" not in log_content
