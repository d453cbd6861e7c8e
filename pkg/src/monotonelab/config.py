"""key=value configuration files with typed schemas.

One experiment is described by a flat text file of ``key = value`` lines
('#' comments allowed) plus command-line overrides of the same form.  The
canonical serialization is embedded in every CSV report, and parsing that
echo back reproduces the configuration exactly.
"""

from __future__ import annotations

import math

__all__ = ["ConfigError", "parse_kv_text", "parse_assignment", "Schema", "parse_budget"]


class ConfigError(Exception):
    """Invalid configuration; the CLI maps this to exit code 2."""


def parse_assignment(line: str) -> tuple[str, str]:
    key, sep, value = line.partition("=")
    if not sep:
        raise ConfigError(f"expected key=value, got {line!r}")
    return key.strip(), value.strip()


def parse_kv_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            key, value = parse_assignment(line)
        except ConfigError as exc:
            raise ConfigError(f"line {ln}: {exc}") from None
        if not key:
            raise ConfigError(f"line {ln}: empty key")
        out[key] = value
    return out


def _to_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


class Schema:
    """Typed view over a raw key->string mapping.

    Conversions raise ConfigError with the offending key; unknown keys are
    rejected by :meth:`finish` so typos never pass silently.
    """

    def __init__(self, raw: dict[str, str]):
        self._raw = dict(raw)
        self._seen: set[str] = set()

    def _fetch(self, key: str, default, required: bool):
        self._seen.add(key)
        if key in self._raw:
            return self._raw[key]
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def str_(self, key: str, default: str | None = None, choices=None, required=False):
        raw = self._fetch(key, default, required)
        if raw is None:
            return None
        if choices is not None and raw not in choices:
            raise ConfigError(f"{key}: expected one of {sorted(choices)}, got {raw!r}")
        return raw

    def int_(self, key: str, default=None, required=False):
        raw = self._fetch(key, default, required)
        if raw is None or isinstance(raw, int):
            return raw
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None

    def float_(self, key: str, default=None, required=False):
        raw = self._fetch(key, default, required)
        if raw is None or isinstance(raw, float):
            return raw
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None

    def bool_(self, key: str, default=None):
        raw = self._fetch(key, default, False)
        if raw is None or isinstance(raw, bool):
            return raw
        return _to_bool(raw)

    def int_list(self, key: str, default=None, required=False):
        raw = self._fetch(key, default, required)
        if raw is None or isinstance(raw, tuple):
            return raw
        try:
            return tuple(int(part) for part in raw.split(",") if part.strip())
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated integers, got {raw!r}") from None

    def float_list(self, key: str, default=None, required=False):
        raw = self._fetch(key, default, required)
        if raw is None or isinstance(raw, tuple):
            return raw
        try:
            return tuple(float(part) for part in raw.split(",") if part.strip())
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated numbers, got {raw!r}") from None

    def finish(self) -> None:
        unknown = set(self._raw) - self._seen
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")


def parse_budget(rule: str, n: int, c: float) -> int:
    """Budget rules: an absolute integer, 'M*nlogn', or 'M*n15'."""
    rule = rule.strip()
    if "*" in rule:
        mult_text, _, kind = rule.partition("*")
        try:
            mult = float(mult_text)
        except ValueError:
            raise ConfigError(f"bad budget multiplier in {rule!r}") from None
        kind = kind.strip()
        if kind == "nlogn":
            return math.ceil(mult * n * math.log(n))
        if kind == "n15":
            return math.ceil(mult * n**1.5)
        raise ConfigError(f"unknown budget rule {rule!r} (use M*nlogn, M*n15, or an integer)")
    try:
        return int(rule)
    except ValueError:
        raise ConfigError(f"budget must be an integer or M*nlogn / M*n15, got {rule!r}") from None
