"""Line-oriented run configuration.

::

    # comment
    [run]
    mode = reg
    trials = 20
    distributions = gauss, ber, chi

    [regression]
    spectrum = atoms = [[1, 0.3], [5, 0.7]]
    sigma = 0.15

    [sweep]
    variable = kappa
    grid = 1.25:5:8

Values are split at the first ``=`` only, so density literals keep their own
``=``.  Keys before the first section header belong to ``[run]``.  Command
line flags override file values.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .datagen import EntryDistribution
from .errors import ConfigError, TransferLinError
from .spectral import parse_density

OUT_ENV = "TRANSFERLIN_OUT"
DEFAULT_OUT = "transferlin_out"


def parse_grid(text):
    """``a:b:k`` (``k`` evenly spaced points) or a comma list."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range grids are written lo:hi:count")
        lo, hi, k = float(parts[0]), float(parts[1]), int(parts[2])
        if k < 1:
            raise ValueError("grid count must be positive")
        if k == 1:
            return [lo]
        return [float(v) for v in np.linspace(lo, hi, k)]
    vals = [float(v) for v in text.replace(",", " ").split()]
    if not vals:
        raise ValueError("empty grid")
    return vals


def _positive_int(text):
    v = int(str(text).strip())
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _seed(text):
    v = int(str(text).strip(), 0)
    if v < 0 or v >= 2 ** 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return v


def _choice(*options):
    def parse(text):
        v = str(text).strip()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v
    return parse


def _dists(text):
    items = [t for t in str(text).replace(",", " ").split() if t]
    if not items:
        raise ValueError("empty distribution list")
    return [EntryDistribution.parse(t).value for t in items]


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _density_text(text):
    parse_density(text)
    return str(text).strip()


SCHEMA = {
    "run": {
        "mode": _choice("reg", "class"),
        "trials": _positive_int,
        "seed": _seed,
        "workers": _positive_int,
        "out": str,
        "distributions": _dists,
        "stem": str,
        "gnuplot": _bool,
    },
    "regression": {
        "d": _positive_int, "kappa": float, "sigma": float, "ea": float,
        "spectrum": _density_text, "noise": _choice("gauss", "entry"),
    },
    "classification": {
        "d": _positive_int, "kappa": float, "rho": float, "r": float, "c": float, "ea": float,
    },
    "sweep": {
        "variable": _choice("kappa", "sigma", "rho"),
        "grid": parse_grid,
    },
    "regime": {"high": float, "low": float},
}

DEFAULTS = {
    "run": {"mode": "reg", "trials": 20, "seed": 0, "workers": None, "out": None,
            "distributions": ["gauss", "ber", "chi"], "stem": None, "gnuplot": False},
    "regression": {"d": 1000, "kappa": 2.0, "sigma": 0.15, "ea": 1.0, "spectrum": "single",
                   "noise": "gauss"},
    "classification": {"d": 1000, "kappa": 2.0, "rho": 1.0, "r": 0.9, "c": 1.0, "ea": None},
    "sweep": {"variable": "kappa", "grid": None},
    "regime": {"high": 100.0, "low": 0.01},
}


@dataclass
class RunConfig:
    values: Dict[str, Dict[str, object]] = field(
        default_factory=lambda: {s: dict(v) for s, v in DEFAULTS.items()}
    )
    raw: Dict[str, Dict[str, str]] = field(default_factory=dict)

    def get(self, section, key):
        return self.values[section][key]

    def set(self, section, key, text, line=None):
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", line=line)
        parser = SCHEMA[section].get(key)
        if parser is None:
            raise ConfigError(f"unknown key in [{section}]", line=line, key=key)
        try:
            value = parser(text)
        except (ValueError, TypeError, TransferLinError) as exc:
            raise ConfigError(f"bad value {str(text).strip()!r}: {exc}", line=line, key=key) from None
        self.values[section][key] = value
        self.raw.setdefault(section, {})[key] = str(text).strip()

    @property
    def workers(self):
        w = self.values["run"]["workers"]
        return w if w is not None else (os.cpu_count() or 1)

    @property
    def out(self):
        o = self.values["run"]["out"]
        if o:
            return o
        return os.environ.get(OUT_ENV) or DEFAULT_OUT

    def to_text(self):
        """Resolved configuration in the same file format (used for manifests)."""
        lines = []
        for section, keys in DEFAULTS.items():
            lines.append(f"[{section}]")
            for key in keys:
                if key in self.raw.get(section, {}):
                    text = self.raw[section][key]
                else:
                    v = self.values[section][key]
                    if v is None:
                        continue
                    text = ", ".join(map(str, v)) if isinstance(v, list) else str(v)
                if section == "run" and key in ("workers", "out"):
                    continue  # do not affect results; kept out so manifests are portable
                lines.append(f"{key} = {text}")
            lines.append("")
        return "\n".join(lines).rstrip() + "\n"


def parse_config_text(text, config: Optional[RunConfig] = None) -> RunConfig:
    config = config or RunConfig()
    section = "run"
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#") or s.startswith(";"):
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError("unterminated section header", line=lineno)
            section = s[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in s:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = s.split("=", 1)
        config.set(section, key.strip(), value, line=lineno)
    return config


def load_config(path, config: Optional[RunConfig] = None) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config_text(text, config)
