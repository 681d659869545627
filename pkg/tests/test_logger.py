import logging

import pytest

from core.logger import AppLogger


class TestAppLogger:
    """Test logging functionality with file support."""

    @pytest.fixture
    def logger(self, tmp_path):
        """Create logger with temp log file."""
        log_file = tmp_path / "test.log"
        return AppLogger(log_file)

    @pytest.fixture
    def logger_no_file(self):
        """Create logger without file output."""
        return AppLogger(None)

    # Basic Logging Tests
    def test_logger_creates_log_file(self, tmp_path):
        """Logger should create log file on first write."""
        log_file = tmp_path / "test.log"
        logger = AppLogger(log_file)

        logger.info("Test message")

        assert log_file.exists()

    def test_logger_without_file_doesnt_crash(self, logger_no_file):
        """Logger should work without a log file."""
        logger_no_file.info("Test message")
        logger_no_file.error("Error message")

    @pytest.mark.parametrize("method,label", [
        ("debug", "DEBUG"),
        ("info", "INFO"),
        ("warning", "WARNING"),
        ("error", "ERROR"),
    ])
    def test_levels_written_to_file(self, logger, method, label):
        """File handler records every level regardless of the console threshold."""
        getattr(logger, method)(f"{method} message")

        contents = logger.get_log_contents()
        assert f"{method} message" in contents
        assert label in contents

    def test_success_logging(self, logger):
        """Success messages should be logged as info with checkmark."""
        logger.success("Readout 0x3")

        contents = logger.get_log_contents()
        assert "Readout 0x3" in contents
        assert "✓" in contents

    # Console Tests
    def test_console_goes_to_stderr(self, capsys):
        """Console output must not mix with command results on stdout."""
        logger = AppLogger(None)
        logger.warning("Unsharp trials")

        captured = capsys.readouterr()
        assert captured.out == ""
        assert "Unsharp trials" in captured.err

    def test_console_threshold(self, capsys):
        """Messages below the console level are not printed."""
        logger = AppLogger(None, level="WARNING")
        logger.info("quiet")
        logger.error("loud")

        captured = capsys.readouterr()
        assert "quiet" not in captured.err
        assert "loud" in captured.err

    @pytest.mark.parametrize("level,expected", [
        ("debug", logging.DEBUG),
        ("INFO", logging.INFO),
        (logging.ERROR, logging.ERROR),
        ("nonsense", logging.WARNING),
    ])
    def test_level_names(self, level, expected):
        """Level names are case-insensitive; unknown names fall back to WARNING."""
        assert AppLogger._level(level) == expected

    def test_handlers_not_duplicated(self, tmp_path):
        """Creating a second logger replaces the handlers of the first."""
        AppLogger(tmp_path / "a.log")
        logger = AppLogger(tmp_path / "b.log")

        assert len(logger.logger.handlers) == 2

    # Log File Operations
    def test_get_log_contents_empty(self, tmp_path):
        """Should return empty string for non-existent log."""
        logger = AppLogger(tmp_path / "nonexistent.log")

        assert logger.get_log_contents() == ""

    def test_clear_logs(self, logger):
        """Should clear log file contents."""
        logger.info("Message before clear")
        logger.clear_logs()

        contents = logger.get_log_contents()

        assert "Message before clear" not in contents
        assert "Logs cleared" in contents

    def test_clear_logs_without_file(self, logger_no_file):
        """Clearing logs without file should not crash."""
        logger_no_file.clear_logs()

    def test_log_order_preserved(self, logger):
        """Logs should appear in order they were written."""
        logger.info("First")
        logger.info("Second")
        logger.info("Third")

        contents = logger.get_log_contents()

        assert contents.find("First") < contents.find("Second") < contents.find("Third")

    def test_log_file_in_nested_directory(self, tmp_path):
        """Should create nested directories for log file."""
        log_file = tmp_path / "nested" / "dir" / "test.log"
        logger = AppLogger(log_file)

        logger.info("Test")

        assert log_file.exists()
