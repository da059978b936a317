"""Flat ``key = value`` configuration files."""
from pathlib import Path
from typing import Dict

from kfino.models.config import RunConfig
from kfino.utils.exceptions import FileError, ParseError
from kfino.utils.series_io import format_number, write_text


def parse_config_string(content: str) -> Dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Raises:
        ParseError: On a line without ``=``, an empty key or a repeated key
    """
    values: Dict[str, str] = {}
    for line_number, raw in enumerate(content.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"Expected 'key = value', got '{line}'", line=line_number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("Missing key", line=line_number, column=1)
        if key in values:
            raise ParseError(f"Duplicate key '{key}'", line=line_number)
        values[key] = value
    return values


def load_config(file_path: str) -> RunConfig:
    """Load and validate a configuration file.

    Raises:
        FileError: If file doesn't exist or can't be read
        ParseError: If a line is malformed
        ValidationError: If a key is unknown or a value invalid
    """
    path = Path(file_path)
    if not path.exists():
        raise FileError(f"File not found: {file_path}")
    try:
        content = path.read_text(encoding='utf-8')
    except Exception as e:
        raise FileError(f"Cannot read file: {e}")
    return RunConfig.from_mapping(parse_config_string(content))


def format_config(config: RunConfig) -> str:
    lines = []
    for key, value in config.as_dict().items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {format_number(value)}")
    return "\n".join(lines) + "\n"


def save_config(config: RunConfig, file_path: str) -> None:
    """Write every set key in field order.

    Raises:
        FileError: If file can't be written
    """
    write_text(file_path, format_config(config))
