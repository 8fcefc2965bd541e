"""Packaged scenario presets.

Each preset is an ordinary config file shipped with the package and fed
through the same parser as user configs, so the CLI treats `reproduce`
presets and `run` inputs identically.
"""

from __future__ import annotations

from importlib import resources

from .config import RunConfig, parse_config_text
from .errors import ConfigError

PRESET_NAMES = ("fig2", "fig3-pure", "fig3-zero", "fig4", "fig5")


def preset_text(name: str) -> str:
    if name not in PRESET_NAMES:
        raise ConfigError(
            f"unknown preset {name!r}; have {', '.join(PRESET_NAMES)}")
    ref = resources.files("qlmeas") / "presets" / f"{name}.toml"
    return ref.read_text(encoding="utf-8")


def load_preset(name: str) -> RunConfig:
    return parse_config_text(preset_text(name), path=f"preset:{name}")
