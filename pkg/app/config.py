# app/config.py

"""
Flat-key experiment configuration.

A config file is a list of ``key = value`` lines with dotted namespaces::

    # TextGrid profile
    env.name = textgrid
    cache.delta0 = 0.97
    provider.latency.miss_ms = 349
    run.seeds = 0, 1, 2

Lines are folded into a nested mapping and validated by ``ExperimentConfig``;
every problem (syntax, unknown key, bad value) is collected and raised together
as a ``ConfigError``.
"""

import logging
import re
from pathlib import Path
from typing import Any, Iterable

from pydantic import ValidationError

from app.exceptions import ConfigError
from app.schemas import ExperimentConfig

logger = logging.getLogger("app.config")

KEY_PATTERN = re.compile(r"^[a-z_][a-z0-9_]*(\.[a-z_][a-z0-9_]*)*$")
INT_PATTERN = re.compile(r"^[+-]?\d+$")


def parse_value(raw: str) -> Any:
    text = raw.strip()
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if "," in text:
        return [parse_value(part) for part in text.split(",") if part.strip()]
    if INT_PATTERN.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def parse_lines(lines: Iterable[str]) -> tuple[dict[str, Any], list[str]]:
    """Fold ``key = value`` lines into a nested dict; return it with any syntax problems."""
    nested: dict[str, Any] = {}
    problems: list[str] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            problems.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if not KEY_PATTERN.match(key):
            problems.append(f"line {lineno}: malformed key {key!r}")
            continue
        if key in seen:
            problems.append(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
            continue
        seen[key] = lineno

        node = nested
        *parents, leaf = key.split(".")
        clash = False
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                problems.append(f"line {lineno}: {key!r} nests under a scalar key")
                clash = True
                break
            node = child
        if clash:
            continue
        if isinstance(node.get(leaf), dict):
            problems.append(f"line {lineno}: {key!r} is a section, not a value")
            continue
        node[leaf] = parse_value(raw)
    return nested, problems


def _format_error(err: dict) -> str:
    loc = ".".join(str(p) for p in err["loc"])
    if err["type"] == "extra_forbidden":
        return f"unknown key {loc!r}"
    return f"{loc or 'config'}: {err['msg']}"


def build_config(nested: dict[str, Any], problems: list[str] | None = None) -> ExperimentConfig:
    problems = list(problems or [])
    config = None
    try:
        config = ExperimentConfig.model_validate(nested)
    except ValidationError as exc:
        problems.extend(_format_error(err) for err in exc.errors())
    if problems:
        for problem in problems:
            logger.error("Config problem: %s", problem)
        raise ConfigError(problems)
    return config


def load_config(
    path: str | Path | None = None,
    *,
    seeds: list[int] | None = None,
    out_dir: str | None = None,
) -> ExperimentConfig:
    """Load a config file (or defaults when ``path`` is None) and apply CLI overrides."""
    nested: dict[str, Any] = {}
    problems: list[str] = []
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        nested, problems = parse_lines(text.splitlines())
    if seeds is not None:
        nested.setdefault("run", {})["seeds"] = list(seeds)
    if out_dir is not None:
        nested.setdefault("run", {})["out_dir"] = out_dir
    config = build_config(nested, problems)
    logger.info("Loaded config %s (hash %s)", path or "<defaults>", config.config_hash()[:12])
    return config


def parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError([f"--seeds: {exc}"]) from exc
    if not seeds:
        raise ConfigError(["--seeds: at least one seed is required"])
    return seeds
