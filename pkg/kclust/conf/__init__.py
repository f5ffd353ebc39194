"""
Settings and configuration for kclust.

Read values from conf.global_settings, then from the module named by the
KCLUST_SETTINGS_MODULE environment variable (core.settings by default); see
core/settings.py for the variables read from the environment.
"""

import importlib
from pathlib import Path
from typing import Any, Optional, Set

import conf.global_settings as global_settings
from dotenv import load_dotenv
from exceptions import ImproperlyConfigured
from utils import get_env

ENVIRONMENT_VARIABLE = "KCLUST_SETTINGS_MODULE"
ENV_FILE = Path(__file__).resolve().parent.parent.parent / ".env"
if ENV_FILE.exists():
    # Variables already exported by the shell take precedence over the file.
    load_dotenv(str(ENV_FILE), override=False)


class Settings:
    """
    Snapshot of the global defaults overridden by a settings module.
    """

    def __init__(self, settings_module: str) -> None:
        for setting in dir(global_settings):
            if setting.isupper():
                setattr(self, setting, getattr(global_settings, setting))

        self.SETTINGS_MODULE = settings_module
        try:
            mod = importlib.import_module(settings_module)
        except ImportError as exc:
            raise ImproperlyConfigured(
                f"Could not import settings module {settings_module!r}: {exc}"
            ) from exc

        self._explicit_settings: Set[str] = set()
        for setting in dir(mod):
            if setting.isupper():
                setattr(self, setting, getattr(mod, setting))
                self._explicit_settings.add(setting)

    def is_overridden(self, setting: str) -> bool:
        return setting in self._explicit_settings

    def __repr__(self) -> str:
        return f'<Settings "{self.SETTINGS_MODULE}">'


class LazySettings:
    """
    A lazy proxy for the settings object.

    The settings module is imported the first time a value is requested, so
    that importing library modules never has side effects on the environment.
    Values can be overridden for the lifetime of the process with
    ``configure``.
    """

    def __init__(self) -> None:
        self.__dict__["_wrapped"] = None

    def _setup(self, name: Optional[str] = None) -> None:
        settings_module = get_env(ENVIRONMENT_VARIABLE, "core.settings")
        if not settings_module:
            desc = f"setting {name}" if name else "settings"
            raise ImproperlyConfigured(
                f"Requested {desc}, but {ENVIRONMENT_VARIABLE} is empty."
            )
        self.__dict__["_wrapped"] = Settings(settings_module)

    def __getattr__(self, name: str) -> Any:
        if self._wrapped is None:
            self._setup(name)
        try:
            return getattr(self._wrapped, name)
        except AttributeError:
            raise ImproperlyConfigured(f"Unknown setting {name!r}") from None

    def __setattr__(self, name: str, value: Any) -> None:
        if self._wrapped is None:
            self._setup(name)
        setattr(self._wrapped, name, value)

    def configure(self, **options: Any) -> None:
        """
        Override individual settings.

        Args:
            **options: UPPERCASE setting names and their values.

        Raises:
            TypeError: If a setting name is not uppercase.
        """
        if self._wrapped is None:
            self._setup()
        for name, value in options.items():
            if not name.isupper():
                raise TypeError(f"Setting {name!r} must be uppercase.")
            setattr(self._wrapped, name, value)

    @property
    def configured(self) -> bool:
        """Return True if the settings module has been loaded."""
        return self._wrapped is not None

    def __repr__(self) -> str:
        if self._wrapped is None:
            return "<LazySettings [Unevaluated]>"
        return f'<LazySettings "{self._wrapped.SETTINGS_MODULE}">'


settings = LazySettings()
