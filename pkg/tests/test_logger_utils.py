import logging

from logger_utils import get_logger


def test_exception_attaches_traceback(caplog):
    logger = get_logger('gb2d.tests')
    with caplog.at_level(logging.DEBUG, logger='gb2d.tests'):
        try:
            raise ValueError("bad threshold")
        except ValueError:
            logger.exception("localize failed")
            logger.exception("localize failed again", exc_info=False)

    first, second = caplog.records[-2:]
    assert first.levelno == logging.ERROR
    assert first.exc_info is not None and first.exc_info[0] is ValueError
    assert "bad threshold" in caplog.text
    assert not second.exc_info


def test_levels_below_threshold_are_dropped(caplog):
    logger = get_logger('gb2d.tests.quiet')
    with caplog.at_level(logging.WARNING, logger='gb2d.tests.quiet'):
        logger.info("hidden")
        logger.warning("shown")
        assert not logger.is_enabled_for(logging.DEBUG)
    assert [record.getMessage() for record in caplog.records] == ["shown"]
