import logging
import os
from pathlib import Path


def setup_logger():
    """
    Configure and return the package logger.

    Logs go to ``logs/edmkit.log`` unless ``EDM_LOG_DIR`` points elsewhere.

    Returns:
        logging.Logger: Configured logger instance.
    """
    log_dir = Path(os.getenv("EDM_LOG_DIR", "logs"))
    log_dir.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger("edmkit")
    logger.setLevel(logging.DEBUG)

    if not logger.handlers:
        file_formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        file_handler = logging.FileHandler(log_dir / "edmkit.log")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(file_formatter)
        logger.addHandler(file_handler)

    return logger


logger = setup_logger()
