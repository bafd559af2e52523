"""Run configuration.

Sources, highest priority first: command-line flags, ``MMFC_*`` environment
variables, an INI config file, built-in defaults. The file uses three
sections::

    [providers]
    mode = replay-strict
    fixture_dir = tests/fixtures/suite
    chat_model = gpt-4o-mini

    [workflow]
    confidence_threshold = 4
    max_reasoning_steps = 12

    [run]
    output_dir = out
    seed = 0

Every key ``k`` can also be set through the variable ``MMFC_<K>`` (upper
case), e.g. ``MMFC_MODE`` or ``MMFC_MAX_REPLANS``. ``MMFC_CONFIG`` names
the file when no ``--config`` flag is given.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from .errors import ConfigError
from .orchestrator import WorkflowConfig
from .providers.replay import ProviderMode

ENV_PREFIX = "MMFC_"


def _bool(text: Any) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_str(text: Any) -> Optional[str]:
    return None if text is None or str(text).strip() == "" else str(text).strip()


_PROVIDER_KEYS = {
    "mode": str,
    "fixture_dir": _optional_str,
    "chat_base_url": _optional_str,
    "chat_model": _optional_str,
    "search_url": _optional_str,
    "vision_url": _optional_str,
    "deepfake_constant": float,
}
_RUN_KEYS = {
    "blocklist": _optional_str,
    "output_dir": str,
    "seed": int,
    "concurrency": int,
}
_WORKFLOW_KEYS = {
    f.name: (_bool if f.type in (bool, "bool") else str if f.type in (str, "str") else int)
    for f in dataclasses.fields(WorkflowConfig)
}
SECTIONS = {"providers": _PROVIDER_KEYS, "workflow": _WORKFLOW_KEYS, "run": _RUN_KEYS}
_ALL_KEYS = {k: conv for keys in SECTIONS.values() for k, conv in keys.items()}


@dataclass(frozen=True)
class RunConfig:
    mode: ProviderMode = ProviderMode.REPLAY_STRICT
    fixture_dir: Optional[str] = None
    chat_base_url: Optional[str] = None
    chat_model: Optional[str] = None
    search_url: Optional[str] = None
    vision_url: Optional[str] = None
    deepfake_constant: float = 0.0
    workflow: WorkflowConfig = field(default_factory=WorkflowConfig)
    blocklist: Optional[str] = None
    output_dir: str = "out"
    seed: int = 0
    concurrency: int = 4

    def __post_init__(self):
        object.__setattr__(self, "mode", ProviderMode(self.mode))
        if self.mode is ProviderMode.REPLAY_STRICT and not self.fixture_dir:
            raise ConfigError("replay-strict mode requires a fixture directory (--fixtures or MMFC_FIXTURE_DIR)")
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")
        if not 0.0 <= self.deepfake_constant <= 1.0:
            raise ConfigError("deepfake_constant must lie in [0, 1]")


def read_config_file(path: str) -> dict[str, str]:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, value in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            values[key] = value
    return values


def env_values(env: Mapping[str, str]) -> dict[str, str]:
    return {k: env[ENV_PREFIX + k.upper()] for k in _ALL_KEYS if ENV_PREFIX + k.upper() in env}


def load_config(
    flags: Optional[Mapping[str, Any]] = None,
    *,
    env: Optional[Mapping[str, str]] = None,
    config_path: Optional[str] = None,
) -> RunConfig:
    """Merge the four sources; ``None`` flag values count as unset."""
    env = os.environ if env is None else env
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    path = config_path or env.get(ENV_PREFIX + "CONFIG")
    merged: dict[str, Any] = {}
    if path:
        merged.update(read_config_file(path))
    merged.update(env_values(env))
    unknown = set(flags) - set(_ALL_KEYS)
    if unknown:
        raise ConfigError(f"unknown settings {sorted(unknown)}")
    merged.update(flags)

    typed: dict[str, Any] = {}
    for key, value in merged.items():
        try:
            typed[key] = _ALL_KEYS[key](value) if isinstance(value, str) else value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    workflow_args = {k: typed.pop(k) for k in list(typed) if k in _WORKFLOW_KEYS}
    try:
        workflow = WorkflowConfig(**workflow_args)
        return RunConfig(workflow=workflow, **typed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
