import os
import re
from pathlib import Path

import yaml
from dotenv import load_dotenv

from atscalc.utils.logger import get_logger

logger = get_logger("config")

# Load .env first
env_path = Path('.') / '.env'
load_dotenv(dotenv_path=env_path)

_PLACEHOLDER = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-([^}]*))?\}")


class ConfigError(Exception):
    """Raised when a scenario config file cannot be read or is malformed."""
    pass


def resolve(value):
    """Replace ${VAR} and ${VAR:-default} placeholders inside a string."""
    if not isinstance(value, str) or "${" not in value:
        return value

    def substitute(match):
        env_key, default = match.group(1), match.group(2)
        if env_key in os.environ:
            return os.environ[env_key]
        if default is not None:
            return default
        return match.group(0)

    return _PLACEHOLDER.sub(substitute, value)


def recursive_resolve(node):
    if isinstance(node, dict):
        return {k: recursive_resolve(v) for k, v in node.items()}
    if isinstance(node, list):
        return [recursive_resolve(v) for v in node]
    return resolve(node)


def load_config(path="config.yaml") -> dict:
    """
    Load a YAML (or JSON) scenario document and replace env placeholders.

    Args:
        path: Path to the config file.

    Returns:
        dict: The resolved document; an empty file gives an empty dict.

    Raises:
        ConfigError: If the file is missing or is not a mapping.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            cfg = yaml.safe_load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed config file {path}: {e}") from e

    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ConfigError(f"Config root must be a mapping, got {type(cfg).__name__}")

    logger.debug(f"Loaded config from {path} with sections {sorted(cfg)}")
    return recursive_resolve(cfg)
