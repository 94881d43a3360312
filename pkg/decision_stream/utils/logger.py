import logging
import os
import sys
from typing import Optional

from ..config import settings

FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logger(level: Optional[str] = None, log_file: Optional[str] = None) -> logging.Logger:
    """Setup the package logger with a stderr handler and an optional file handler"""
    logger = logging.getLogger('decision_stream')
    logger.setLevel((level or settings.DS_LOG).upper())

    # Replace handlers so repeated CLI invocations in one process don't stack them
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(FORMAT)

    # Console handler; stdout is reserved for results
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    log_file = log_file or settings.DS_LOG_FILE
    if log_file:
        directory = os.path.dirname(log_file)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    logger.propagate = False
    return logger
