"""
Settings for the tool server, the CLI and the analyses.

Precedence: keyword overrides > CODEBADGER_* environment variables > config file > defaults.
The config file is line-oriented ``key: value`` (read as YAML); its path comes from
``--config``, else ``CODEBADGER_CONFIG``, else ``codebadger.yaml`` in the working directory.
"""
import os
from contextvars import ContextVar
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type

import yaml
from pydantic import ValidationError, field_validator
from pydantic.fields import FieldInfo
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from app.core.errors import ConfigError

CONFIG_ENV_VAR = "CODEBADGER_CONFIG"
DEFAULT_CONFIG_FILE = "codebadger.yaml"

DEFAULT_SOURCES = ["read", "recv", "getenv", "gets", "scanf", "fread"]
DEFAULT_SINKS = ["system", "exec", "memcpy", "strcpy", "sprintf", "malloc"]
DEFAULT_SINK_ARGUMENTS = {
    "memcpy": [1, 2],
    "strcpy": [1, 2],
    "system": [0],
    "exec": [0],
    "malloc": [0],
}
DEFAULT_SIZE_ARGUMENTS = {
    "memcpy": 2,
    "strncpy": 2,
    "memset": 2,
    "read": 2,
    "malloc": 0,
    "alloca": 0,
}

_config_path_override: ContextVar[Optional[Path]] = ContextVar("config_path_override", default=None)


def resolve_config_path() -> Optional[Path]:
    override = _config_path_override.get()
    if override is not None:
        return override
    env_path = os.getenv(CONFIG_ENV_VAR)
    if env_path:
        return Path(env_path)
    default = Path(DEFAULT_CONFIG_FILE)
    return default if default.exists() else None


def read_config_file(path: Path) -> Dict[str, Any]:
    try:
        with open(path, mode="r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", detail={"path": str(path)})
    except yaml.YAMLError as e:
        raise ConfigError(f"config file {path} is not valid key: value text", detail=str(e))
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain key: value lines")
    return data


class ConfigFileSettingsSource(PydanticBaseSettingsSource):
    def __init__(self, settings_cls: Type[BaseSettings]):
        super().__init__(settings_cls)
        path = resolve_config_path()
        self._data = read_config_file(path) if path is not None else {}
        unknown = sorted(set(self._data) - set(settings_cls.model_fields))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}", detail=unknown)

    def get_field_value(self, field: FieldInfo, field_name: str) -> Tuple[Any, str, bool]:
        return self._data.get(field_name), field_name, False

    def __call__(self) -> Dict[str, Any]:
        return {k: v for k, v in self._data.items() if v is not None}


class Settings(BaseSettings):
    project_name: str = "codebadger"
    host: str = "127.0.0.1"
    port: int = 8000
    log_level: str = "INFO"
    log_format: Literal["json", "console"] = "json"

    # Sessions / cache / jobs
    cache_root: Path = Path(".cpg-cache")
    cache_entries: int = 64
    worker_count: int = 4
    job_ttl_seconds: int = 3600
    session_ttl_seconds: int = 3600
    allow_git: bool = False
    git_workdir: Path = Path(".cpg-repos")
    source_glob: str = "*.c"
    language: str = "c"

    # Output guards
    max_response_bytes: int = 262144
    query_limit: int = 500

    # Taint configuration
    sources: List[str] = list(DEFAULT_SOURCES)
    sinks: List[str] = list(DEFAULT_SINKS)
    sink_arguments: Dict[str, List[int]] = dict(DEFAULT_SINK_ARGUMENTS)
    size_arguments: Dict[str, int] = dict(DEFAULT_SIZE_ARGUMENTS)

    model_config = SettingsConfigDict(
        env_prefix="CODEBADGER_",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("sources", "sinks")
    @classmethod
    def non_empty_patterns(cls, v: List[str]) -> List[str]:
        if not v or any(not p for p in v):
            raise ValueError("pattern list must be non-empty and contain no blank patterns")
        return v

    @field_validator("port")
    @classmethod
    def valid_port(cls, v: int) -> int:
        if not 0 <= v <= 65535:
            raise ValueError("port must be within 0..65535")
        return v

    @field_validator("cache_entries", "worker_count", "max_response_bytes", "query_limit")
    @classmethod
    def positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings, env_settings, ConfigFileSettingsSource(settings_cls))


def load_settings(config_path: Optional[str] = None, **overrides: Any) -> Settings:
    """Build settings from an explicit config path (the --config flag) plus overrides."""
    token = _config_path_override.set(Path(config_path) if config_path else None)
    try:
        return Settings(**overrides)
    except ValidationError as e:
        problems = [
            {"key": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in e.errors()
        ]
        keys = ", ".join(p["key"] for p in problems)
        raise ConfigError(f"invalid configuration: {keys}", detail=problems)
    finally:
        _config_path_override.reset(token)


@lru_cache()
def get_settings():
    return load_settings()
