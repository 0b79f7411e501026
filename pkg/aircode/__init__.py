import logging.config
import os
from typing import Dict

import yaml
import importlib.resources as importlib_resources
from importlib.metadata import version, PackageNotFoundError

LOGGING_CONFIG = "utils/logging.yaml"
MERGED_SECTIONS = ("formatters", "handlers", "loggers")


def get_version():
    try:
        return version("aircode")
    except PackageNotFoundError:
        return "unknown"


def merge_logging_configs(default_config: Dict, custom_config: Dict) -> Dict:
    """
    Overlay a user logging config on the packaged one. Formatters, handlers and loggers are merged by name,
    so a logging.yaml that only lowers the level of 'aircode.decoder' keeps the packaged handlers.
    """
    merged = {**default_config, **custom_config}
    for section in MERGED_SECTIONS:
        if section in default_config or section in custom_config:
            merged[section] = {**default_config.get(section, {}), **custom_config.get(section, {})}
    return merged


def load_logging_config():
    with importlib_resources.files(__package__).joinpath(LOGGING_CONFIG).open("r") as f:
        default_config = yaml.safe_load(f)

    custom_file = os.path.join(os.getcwd(), "logging.yaml")
    if os.path.exists(custom_file):
        with open(custom_file) as f:
            custom_config = yaml.safe_load(f) or {}
        return merge_logging_configs(default_config, custom_config)
    return default_config


try:
    logging.config.dictConfig(load_logging_config())
except Exception as e:
    print(f"Failed to load logging config: {e}")
