import logging
import sys
import structlog

MAX_FIELD_CHARS = 200


class StderrHandler(logging.StreamHandler):
    """Writes to whatever ``sys.stderr`` is at emit time."""

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


def clip_long_values(logger, method_name, event_dict):
    """Keep source text and big tool params from flooding the log."""
    for key, value in event_dict.items():
        if key == "event":
            continue
        if isinstance(value, str) and len(value) > MAX_FIELD_CHARS:
            event_dict[key] = value[:MAX_FIELD_CHARS] + f"...(+{len(value) - MAX_FIELD_CHARS})"
    return event_dict


def configure_structlog(fmt: str = "json"):
    renderer = (
        structlog.dev.ConsoleRenderer(colors=False)
        if fmt == "console"
        else structlog.processors.JSONRenderer(sort_keys=True)
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            clip_long_values,
            structlog.processors.format_exc_info,
            renderer,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        # setup_logging may run again (serve, each CLI call); loggers must pick up the new config
        cache_logger_on_first_use=False,
    )


def setup_logging(level: str = "INFO", fmt: str = "json"):
    # stderr only: CLI stdout carries tool results
    logging.basicConfig(
        format="%(message)s",
        handlers=[StderrHandler()],
        level=getattr(logging, str(level).upper(), logging.INFO),
        force=True,
    )
    configure_structlog(fmt)


def get_logger(name):
    # lazy proxy: module-level loggers bind to whatever config is live at the first call
    return structlog.get_logger(name, service="codebadger")


# routed through stdlib from import on, so nothing reaches stdout before setup_logging runs
configure_structlog()
