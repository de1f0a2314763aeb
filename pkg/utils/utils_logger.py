"""
Logger Setup Script
File: utils/utils_logger.py

This script provides logging functions for the project.
Every solver step (dispatch LPs, conic relaxations, MILPs, recovery
iterations, bench sweeps) reports through the same loguru logger.

Features:
- Logs information, warnings, and errors to a designated log file.
- Ensures the log directory exists.
- Folder, file name and level come from the environment (.env).
"""

# Imports from Python Standard Library
import os
import pathlib

# Imports from external packages
from dotenv import load_dotenv
from loguru import logger

load_dotenv()

# Get this file name without the extension
CURRENT_SCRIPT = pathlib.Path(__file__).stem

# Set directory where logs will be stored
LOG_FOLDER: pathlib.Path = pathlib.Path(os.getenv("LOG_FOLDER", "logs"))

# Set the name of the log file
LOG_FILE: pathlib.Path = LOG_FOLDER.joinpath(os.getenv("LOG_FILE", "project_log.log"))

# Level written to the log file
LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

# Ensure the log folder exists or create it
try:
    LOG_FOLDER.mkdir(exist_ok=True)
    logger.debug(f"Log folder ready at: {LOG_FOLDER}")
except Exception as e:
    logger.error(f"Error creating log folder: {e}")

# Configure Loguru to write to the log file
try:
    logger.add(LOG_FILE, level=LOG_LEVEL)
    logger.debug(f"Logging to file: {LOG_FILE}")
except Exception as e:
    logger.error(f"Error configuring logger to write to file: {e}")


def get_log_file_path() -> pathlib.Path:
    """Return the path to the log file."""
    return LOG_FILE


def main() -> None:
    """Report where the log output goes."""
    logger.info(f"STARTING {CURRENT_SCRIPT}.py")
    logger.info(f"Log level for file sink: {LOG_LEVEL}")
    logger.info(f"View the log output at {LOG_FILE}")
    logger.info(f"EXITING {CURRENT_SCRIPT}.py.")


# Conditional execution block that calls main() only when this file is executed directly
if __name__ == "__main__":
    main()
