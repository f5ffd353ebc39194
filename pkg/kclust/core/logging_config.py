import inspect
import logging
import sys

from loguru import logger

from conf import settings

_configured = False


def setup_intercept_handler() -> None:
    """
    Configure standard logging to intercept and route to Loguru.

    Third-party libraries log through the stdlib; their records end up in the
    same sinks as ours.
    """

    class InterceptHandler(logging.Handler):
        """
        Logging handler that forwards stdlib records to Loguru.
        """

        def emit(self, record: logging.LogRecord) -> None:
            level_name = record.levelname
            if level_name in logger._core.levels:
                level = logger.level(level_name).name
            else:
                level = record.levelno

            # Find the first frame outside the logging module
            frame = inspect.currentframe()
            depth = 0
            while frame and (
                depth == 0 or frame.f_code.co_filename == logging.__file__
            ):
                frame = frame.f_back
                depth += 1

            logger.bind(name=record.name).opt(
                depth=depth, exception=record.exc_info
            ).log(level, record.getMessage())

    logging.basicConfig(handlers=[InterceptHandler()], level=0, force=True)
    logging.root.setLevel(settings.DEFAULT_LOG_LEVEL)


def configure_loguru_logger(level: str = None) -> None:
    """
    Set up Loguru with a stderr sink and an optional rotating file sink.

    Args:
        level: Minimum level; defaults to settings.DEFAULT_LOG_LEVEL.
    """
    level = level or settings.DEFAULT_LOG_LEVEL
    logger.remove()
    logger.configure(extra={"name": settings.PROJECT_NAME})

    # stdout is reserved for command output
    logger.add(sys.stderr, format=settings.LOG_FORMAT, level=level)

    if settings.USE_FILE_LOG:
        logger.add(
            settings.LOG_FILE_PATH,
            rotation="10 MB",
            format=settings.LOG_FORMAT,
            level=level,
        )


def setup_logging(level: str = None, force: bool = False) -> None:
    """
    Configure both standard logging and Loguru once per process.

    Args:
        level: Optional level overriding the configured default.
        force: Reconfigure even if logging was already set up.
    """
    global _configured
    if _configured and not force:
        return
    setup_intercept_handler()
    configure_loguru_logger(level)
    _configured = True


def get_logger(name: str) -> logger.__class__:
    """
    Get a named Loguru logger instance, ensuring setup is run.

    Args:
        name: Identifier to bind to the logger.

    Returns:
        A Loguru logger bound to the given name.
    """
    setup_logging()
    return logger.bind(name=name)
