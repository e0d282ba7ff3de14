import os
import tempfile
from typing import Dict, Optional

from dotenv import load_dotenv  # type: ignore
from pydantic import BaseModel, Field, ValidationError, field_validator  # type: ignore

from .errors import InputError

PREFIX = "NORMCHAR_"


class Settings(BaseModel):
    """Typed view of the NORMCHAR_* keys. Seeds are deliberately absent."""
    default_order: int = Field(8, ge=1, le=12)
    alpha: float = Field(0.05, gt=0, lt=1)
    sample_size: int = Field(100_000, ge=1000)
    permutations: int = Field(999, ge=99)
    asymptotic_min_n: int = Field(10_000, ge=1)
    workers: int = Field(1, ge=1)
    residual_tol: float = Field(1e-12, gt=0)
    log_file: Optional[str] = None
    log_level: str = "DEBUG"

    @field_validator("log_level")
    @classmethod
    def _level(cls, v: str) -> str:
        v = v.upper()
        if v not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {v}")
        return v

    @field_validator("log_file", mode="before")
    @classmethod
    def _blank_is_none(cls, v):
        return v or None


class ConfigManager:
    def __init__(self, env_path=None):
        if env_path:
            self.env_path = env_path
        else:
            # .env in the repository root (parent of engine/)
            base_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
            self.env_path = os.path.join(base_dir, ".env")

    def set_key(self, key: str, value: str):
        """Update or add a key in the .env file atomically."""
        if not key.startswith(PREFIX):
            raise InputError(f"Configuration keys must start with {PREFIX}, got {key}")
        lines = []
        if os.path.exists(self.env_path):
            with open(self.env_path, "r") as f:
                lines = f.readlines()

        new_lines = []
        updated = False
        for line in lines:
            if line.startswith(f"{key}="):
                new_lines.append(f"{key}={value}\n")
                updated = True
            else:
                new_lines.append(line)

        if not updated:
            new_lines.append(f"{key}={value}\n")

        fd, temp_path = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(self.env_path)))
        try:
            with os.fdopen(fd, "w") as tmp:
                tmp.writelines(new_lines)
            os.replace(temp_path, self.env_path)
        except Exception:
            if os.path.exists(temp_path):
                os.remove(temp_path)
            raise

        os.environ[key] = value
        load_dotenv(self.env_path, override=True)

    def get_key(self, key: str, default: str = "") -> str:
        load_dotenv(self.env_path, override=True)
        return os.getenv(key, default)

    def delete_key(self, key: str):
        """Remove a key from .env file and environment."""
        os.environ.pop(key, None)
        if not os.path.exists(self.env_path):
            return
        with open(self.env_path, "r") as f:
            lines = f.readlines()
        with open(self.env_path, "w") as f:
            for line in lines:
                if not line.startswith(f"{key}="):
                    f.write(line)

    def get_all_keys(self) -> Dict[str, str]:
        """Every key written to .env, unmasked (nothing here is secret)."""
        result = {}
        if not os.path.exists(self.env_path):
            return result
        with open(self.env_path, "r") as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" in line:
                    key, value = line.split("=", 1)
                    result[key.strip()] = value.strip()
        return result

    def get_config(self) -> Settings:
        """Settings from the environment layered over .env, validated."""
        load_dotenv(self.env_path, override=False)
        raw = {}
        for name in Settings.model_fields:
            value = os.getenv(PREFIX + name.upper())
            if value is not None and value != "":
                raw[name] = value
        try:
            return Settings(**raw)
        except ValidationError as e:
            raise InputError(f"Invalid configuration in {self.env_path}: {e}") from e

    def reset_all(self):
        """Clear all keys from .env."""
        for key in self.get_all_keys():
            os.environ.pop(key, None)
        if os.path.exists(self.env_path):
            with open(self.env_path, "w") as f:
                f.write("# normchar configuration\n")


config_manager = ConfigManager()
