"""Declarative experiment-config parsing.

The format is line-oriented: ``[section]`` headers, ``key = value`` pairs,
``#`` comments.  Sections are ``experiment``, ``input``, ``impl_1``,
``impl_2``.  Unknown sections or keys are errors, never silently ignored.
The full grammar and key reference live in docs/config.md; the bundled
presets are ordinary config files parsed through this same path.
"""
from __future__ import annotations

import shlex
from dataclasses import dataclass
from importlib import resources

from .harness import (
    DISTRIBUTIONS,
    EDGE_POOL,
    ExperimentConfig,
    ImplementationHandle,
    InputSpec,
)
from .kernels import KernelConfig
from .metrics import METRIC_NAMES
from .minifloat import parse_format

__all__ = ["ConfigError", "parse_config", "apply_overrides", "load_preset", "PRESETS"]

PRESETS = ("case1", "case2", "case2_fixed")

SECTIONS = ("experiment", "input", "impl_1", "impl_2")

_KEYS = {
    "experiment": ("num_tests", "seed", "alpha", "metric"),
    "input": ("rows_a", "cols_a", "cols_b", "distribution", "element_format",
              "edge_case_rate", "edge_pool"),
    "impl_1": ("label", "kind", "element_format", "accumulate_format", "reduction",
               "output_format", "command", "timeout"),
    "impl_2": ("label", "kind", "element_format", "accumulate_format", "reduction",
               "output_format", "command", "timeout"),
}


class ConfigError(ValueError):
    """Config syntax or semantic error with source position when known."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


@dataclass
class _Raw:
    value: str
    line: int | None


def _strip_comment(text: str) -> str:
    in_quote = False
    for i, ch in enumerate(text):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            return text[:i]
    return text


def _parse_sections(text: str) -> dict[str, dict[str, _Raw]]:
    sections: dict[str, dict[str, _Raw]] = {s: {} for s in SECTIONS}
    current: str | None = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw_line).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("unterminated section header", lineno, len(raw_line))
            name = line[1:-1].strip()
            if name not in SECTIONS:
                raise ConfigError(
                    f"unknown section [{name}]; expected one of {', '.join(SECTIONS)}", lineno, 1)
            current = name
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno, len(raw_line.rstrip()) or 1)
        if current is None:
            raise ConfigError("key outside of any [section]", lineno, 1)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEYS[current]:
            raise ConfigError(
                f"unknown key '{key}' in [{current}]; allowed: {', '.join(_KEYS[current])}",
                lineno, 1)
        if key in sections[current]:
            raise ConfigError(f"duplicate key '{key}' in [{current}]", lineno, 1)
        if not value:
            raise ConfigError(f"empty value for '{key}'", lineno, raw_line.find("=") + 2)
        sections[current][key] = _Raw(value, lineno)
    return sections


def _unquote(raw: _Raw) -> str:
    v = raw.value
    if v.startswith('"') and v.endswith('"') and len(v) >= 2:
        return v[1:-1]
    return v


def _to_int(section: str, key: str, raw: _Raw) -> int:
    try:
        return int(raw.value, 0)
    except ValueError:
        raise ConfigError(f"{section}.{key} must be an integer, got {raw.value!r}",
                          raw.line) from None


def _to_float(section: str, key: str, raw: _Raw) -> float:
    try:
        return float(raw.value)
    except ValueError:
        raise ConfigError(f"{section}.{key} must be a number, got {raw.value!r}",
                          raw.line) from None


def _to_format(section: str, key: str, raw: _Raw):
    try:
        return parse_format(_unquote(raw))
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}", raw.line) from None


def _call_form(value: str) -> tuple[str, list[str]]:
    """Split ``name(a,b)`` into (name, [args]); plain names give no args."""
    v = value.strip()
    if "(" not in v:
        return v, []
    if not v.endswith(")"):
        raise ValueError(f"malformed parameter list in {value!r}")
    name, _, inner = v[:-1].partition("(")
    args = [a.strip() for a in inner.split(",")] if inner.strip() else []
    return name.strip(), args


def _build_input(sec: dict[str, _Raw]) -> InputSpec:
    kwargs: dict = {}
    for key in ("rows_a", "cols_a", "cols_b"):
        if key in sec:
            kwargs[key] = _to_int("input", key, sec[key])
    if "distribution" in sec:
        raw = sec["distribution"]
        try:
            name, args = _call_form(_unquote(raw))
        except ValueError as exc:
            raise ConfigError(f"input.distribution: {exc}", raw.line) from None
        if name not in DISTRIBUTIONS:
            raise ConfigError(
                f"input.distribution must be one of {', '.join(DISTRIBUTIONS)}, got {name!r}",
                raw.line)
        try:
            params = tuple(float(a) for a in args)
        except ValueError:
            raise ConfigError(f"input.distribution parameters must be numbers: {raw.value!r}",
                              raw.line) from None
        kwargs["distribution"] = name
        kwargs["dist_params"] = params
    if "element_format" in sec:
        kwargs["element_format"] = _to_format("input", "element_format", sec["element_format"])
    if "edge_case_rate" in sec:
        kwargs["edge_case_rate"] = _to_float("input", "edge_case_rate", sec["edge_case_rate"])
    if "edge_pool" in sec:
        raw = sec["edge_pool"]
        pool = tuple(p.strip() for p in _unquote(raw).split(",") if p.strip())
        for p in pool:
            if p not in EDGE_POOL:
                raise ConfigError(
                    f"input.edge_pool: unknown case {p!r}; known: {', '.join(EDGE_POOL)}",
                    raw.line)
        kwargs["edge_pool"] = pool
    try:
        return InputSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"input: {exc}") from None


def _build_impl(section: str, sec: dict[str, _Raw]) -> ImplementationHandle:
    label = _unquote(sec["label"]) if "label" in sec else section
    kind = _unquote(sec["kind"]).lower() if "kind" in sec else "builtin"
    if kind not in ("builtin", "external"):
        raise ConfigError(f"{section}.kind must be 'builtin' or 'external', got {kind!r}",
                          sec["kind"].line)
    if kind == "external":
        for key in ("element_format", "accumulate_format", "reduction", "output_format"):
            if key in sec:
                raise ConfigError(
                    f"{section}.{key} applies only to builtin kernels", sec[key].line)
        if "command" not in sec:
            raise ConfigError(f"{section}.command is required for external implementations")
        raw = sec["command"]
        command = tuple(shlex.split(_unquote(raw)))
        if not command:
            raise ConfigError(f"{section}.command is empty", raw.line)
        timeout = _to_float(section, "timeout", sec["timeout"]) if "timeout" in sec else 30.0
        if timeout <= 0:
            raise ConfigError(f"{section}.timeout must be positive", sec["timeout"].line)
        return ImplementationHandle(label=label, command=command, timeout=timeout)

    for key in ("command", "timeout"):
        if key in sec:
            raise ConfigError(
                f"{section}.{key} applies only to external implementations", sec[key].line)
    kwargs: dict = {}
    for key in ("element_format", "accumulate_format", "output_format"):
        if key in sec:
            kwargs[key] = _to_format(section, key, sec[key])
    if "reduction" in sec:
        raw = sec["reduction"]
        try:
            name, args = _call_form(_unquote(raw))
        except ValueError as exc:
            raise ConfigError(f"{section}.reduction: {exc}", raw.line) from None
        if name == "blocked":
            if len(args) != 1:
                raise ConfigError(f"{section}.reduction: blocked takes one block size",
                                  raw.line)
            try:
                kwargs["block_size"] = int(args[0])
            except ValueError:
                raise ConfigError(f"{section}.reduction: bad block size {args[0]!r}",
                                  raw.line) from None
        elif args:
            raise ConfigError(f"{section}.reduction: {name} takes no parameters", raw.line)
        kwargs["reduction"] = name
    try:
        kernel = KernelConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from None
    return ImplementationHandle(label=label, kernel=kernel)


def _build_config(sections: dict[str, dict[str, _Raw]]) -> ExperimentConfig:
    exp = sections["experiment"]
    kwargs: dict = {}
    if "num_tests" in exp:
        kwargs["num_tests"] = _to_int("experiment", "num_tests", exp["num_tests"])
    if "seed" in exp:
        kwargs["seed"] = _to_int("experiment", "seed", exp["seed"])
    if "alpha" in exp:
        kwargs["alpha"] = _to_float("experiment", "alpha", exp["alpha"])
    if "metric" in exp:
        metric = _unquote(exp["metric"])
        if metric not in METRIC_NAMES:
            raise ConfigError(
                f"experiment.metric must be one of {', '.join(METRIC_NAMES)}, got {metric!r}",
                exp["metric"].line)
        kwargs["metric"] = metric
    try:
        return ExperimentConfig(
            impl_1=_build_impl("impl_1", sections["impl_1"]),
            impl_2=_build_impl("impl_2", sections["impl_2"]),
            input_spec=_build_input(sections["input"]),
            **kwargs,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str, overrides: list[str] | None = None) -> ExperimentConfig:
    """Parse config text (plus optional ``section.key=value`` overrides)."""
    sections = _parse_sections(text)
    if overrides:
        apply_overrides(sections, overrides)
    return _build_config(sections)


def apply_overrides(sections: dict[str, dict[str, _Raw]], overrides: list[str]) -> None:
    """Apply ``--set section.key=value`` pairs after file parsing."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, _, value = item.partition("=")
        target = target.strip()
        value = value.strip()
        if "." not in target:
            raise ConfigError(f"override key must be section.key, got {target!r}")
        section, _, key = target.partition(".")
        if section not in SECTIONS:
            raise ConfigError(f"unknown section {section!r} in override {item!r}")
        if key not in _KEYS[section]:
            raise ConfigError(
                f"unknown key '{key}' in [{section}]; allowed: {', '.join(_KEYS[section])}")
        if not value:
            raise ConfigError(f"empty value in override {item!r}")
        sections[section][key] = _Raw(value, None)


def load_preset(name: str) -> str:
    """Return the bundled config text for a named experiment preset."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")
    return resources.files("dualdelta").joinpath(f"presets/{name}.cfg").read_text("utf-8")
