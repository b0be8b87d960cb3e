#!/usr/bin/env python3
"""
Run Configuration
One JSON document per run:

    {
      "params":     {"omega_c": 2.7, "omega": 1.0, "a": 1.0, "T": 200.0, "m": 1.0},
      "path":       {"kind": "latitude", "theta0": 1.0471975511965976, "turns": 1},
      "tolerances": {"ode_tol": 1e-10, "quad_tol": 1e-8},
      "sweep":      {"T": [200, 400, 800, 1600]},
      "seed":       0
    }

Optional keys: "grid", "trajectory_samples", "workers", "oracle_segments",
"outputs" (file-name overrides). Missing values fall back to config.py.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional

import config
from dynamics import SystemParams
from errors import ConfigError
from geometry import FieldPath, path_from_spec

log = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {"params", "path", "tolerances", "sweep", "seed", "grid",
                  "trajectory_samples", "workers", "oracle_segments", "outputs"}
PARAM_KEYS = {"omega_c", "omega", "a", "T", "m"}
OUTPUT_KEYS = {"summary", "trajectory", "frames", "sweep", "log"}


@dataclass
class RunConfig:
    params: SystemParams
    path_block: dict
    ode_tol: float = config.ODE_TOL
    quad_tol: float = config.QUAD_TOL
    sweep: Optional[List[float]] = None
    seed: int = 0
    grid: int = config.GRID_POINTS
    trajectory_samples: int = config.TRAJECTORY_SAMPLES
    workers: int = config.SWEEP_WORKERS
    oracle_segments: int = config.ORACLE_SEGMENTS
    outputs: dict = field(default_factory=lambda: {
        "summary": config.SUMMARY_FILE,
        "trajectory": config.TRAJECTORY_FILE,
        "frames": config.FRAMES_FILE,
        "sweep": config.SWEEP_FILE,
        "log": config.LOG_FILE,
    })
    base_dir: Optional[str] = None

    def build_path(self) -> FieldPath:
        return path_from_spec(self.path_block, self.base_dir)

    def sweep_params(self):
        """SystemParams for each sweep entry, in ascending T."""
        if not self.sweep:
            raise ConfigError("config has no sweep block")
        return [self.params.with_T(T) for T in sorted(self.sweep)]

    def to_dict(self):
        return {
            "params": self.params.to_dict(),
            "path": self.path_block,
            "tolerances": {"ode_tol": self.ode_tol, "quad_tol": self.quad_tol},
            "sweep": list(self.sweep) if self.sweep else None,
            "seed": self.seed,
            "grid": self.grid,
            "trajectory_samples": self.trajectory_samples,
            "workers": self.workers,
            "oracle_segments": self.oracle_segments,
        }


def _number(block, key, where, default=None):
    if key not in block:
        if default is None:
            raise ConfigError(f"{where}: missing required key {key!r}")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _count(doc, key, default, minimum):
    value = doc.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{key} must be an integer >= {minimum}, got {value!r}")
    return value


def _tolerance(block, key, default):
    tol = _number(block, key, "tolerances", default)
    if not 0.0 < tol <= config.MAX_TOL:
        raise ConfigError(f"tolerances.{key} must lie in (0, {config.MAX_TOL}], got {tol}")
    return tol


def parse_config(doc: dict, base_dir: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    """Validate a decoded JSON document and build the RunConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    pblock = doc.get("params")
    if not isinstance(pblock, dict):
        raise ConfigError("config needs a 'params' object")
    unknown = set(pblock) - PARAM_KEYS
    if unknown:
        raise ConfigError(f"unknown params keys: {sorted(unknown)}")
    params = SystemParams(
        omega_c=_number(pblock, "omega_c", "params"),
        omega=_number(pblock, "omega", "params"),
        a=_number(pblock, "a", "params"),
        T=_number(pblock, "T", "params"),
        m=_number(pblock, "m", "params", config.DEFAULT_MASS),
    )
    if params.T <= 0:
        raise ConfigError(f"params.T must be positive, got {params.T}")

    path_block = doc.get("path")
    if not isinstance(path_block, dict):
        raise ConfigError("config needs a 'path' object")
    # build once so a bad path fails at load
    path_from_spec(path_block, base_dir)

    tblock = doc.get("tolerances", {})
    if not isinstance(tblock, dict):
        raise ConfigError("'tolerances' must be an object")

    sweep = doc.get("sweep")
    if isinstance(sweep, dict):
        sweep = sweep.get("T")
    if sweep is not None:
        if not isinstance(sweep, list) or not sweep:
            raise ConfigError("sweep must be a non-empty list of T values")
        values = []
        for T in sweep:
            if isinstance(T, bool) or not isinstance(T, (int, float)) or not T > 0:
                raise ConfigError(f"sweep T values must be positive numbers, got {T!r}")
            values.append(float(T))
        if len(set(values)) != len(values):
            raise ConfigError(f"sweep repeats a T value: {values}")
        for T in values:
            params.with_T(T)
        sweep = values

    if seed is None:
        seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")

    outputs = RunConfig.__dataclass_fields__["outputs"].default_factory()
    extra = doc.get("outputs", {})
    if not isinstance(extra, dict) or set(extra) - OUTPUT_KEYS:
        raise ConfigError(f"outputs may only override {sorted(OUTPUT_KEYS)}")
    outputs.update({k: str(v) for k, v in extra.items()})

    grid = _count(doc, "grid", config.GRID_POINTS, 5)
    cfg = RunConfig(
        params=params,
        path_block=dict(path_block),
        ode_tol=_tolerance(tblock, "ode_tol", config.ODE_TOL),
        quad_tol=_tolerance(tblock, "quad_tol", config.QUAD_TOL),
        sweep=sweep,
        seed=seed,
        grid=grid + (grid + 1) % 2,
        trajectory_samples=_count(doc, "trajectory_samples", config.TRAJECTORY_SAMPLES, 2),
        workers=_count(doc, "workers", config.SWEEP_WORKERS, 1),
        oracle_segments=_count(doc, "oracle_segments", config.ORACLE_SEGMENTS, 2),
        outputs=outputs,
        base_dir=base_dir,
    )
    log.debug("config: %s", cfg.to_dict())
    return cfg


def load_config(filename, seed: Optional[int] = None) -> RunConfig:
    """
    Read and validate a run configuration file.

    Raises:
        ConfigError: unreadable file, invalid JSON or schema violations
    """
    try:
        with open(filename, "r") as f:
            doc = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {filename}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{filename} is not valid JSON: {e}") from e
    return parse_config(doc, os.path.dirname(os.path.abspath(filename)), seed)
