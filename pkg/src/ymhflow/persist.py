"""Run configuration files and binary checkpoints.

Checkpoint layout (all integers little-endian ``u32``)::

    b"YMHF" | version | N | n | group tag (4 ASCII bytes, NUL padded)
    | alpha | phi | CRC32 of everything before it

Each field is ``N*N*n*n`` complex entries stored as consecutive ``f64``
pairs (re, im), ordered site-major (x index, then y index) and row-major
within each matrix.

A run configuration is a JSON object with flat dotted keys, for example::

    {"grid.N": 32, "scenario.name": "S5", "scenario.params.R": 0.45,
     "flow.integrator": "RK4", "output.dir": "runs/s5", "deterministic": true}
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .flow import INTEGRATORS, FlowConfig
from .groups import GROUP_NAMES, descriptor
from .higgs import HiggsPair
from .torus import make_grid

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_bytes",
    "pair_from_bytes",
    "ConfigError",
    "RunConfig",
    "load_config",
    "CONFIG_KEYS",
]

MAGIC = b"YMHF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII4s")


def checkpoint_bytes(pair: HiggsPair) -> bytes:
    """Serialize ``pair`` to the checkpoint byte layout."""
    grid, n = pair.grid, pair.n
    tag = pair.group.name.encode("ascii").ljust(4, b"\0")
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, grid.N, n, tag)
    body = b"".join(
        np.ascontiguousarray(x, dtype="<c16").tobytes() for x in (pair.alpha.data, pair.phi.data)
    )
    blob = head + body
    return blob + struct.pack("<I", zlib.crc32(blob))


def pair_from_bytes(blob: bytes) -> HiggsPair:
    """Inverse of :func:`checkpoint_bytes`.

    Raises
    ------
    CheckpointError
        On a bad magic, unsupported version, size mismatch or CRC failure.
    """
    if len(blob) < _HEADER.size + 4:
        raise CheckpointError("checkpoint truncated")
    magic, version, N, n, tag = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {FORMAT_VERSION})")
    count = N * N * n * n
    expected = _HEADER.size + 2 * 16 * count + 4
    if len(blob) != expected:
        raise CheckpointError(f"checkpoint has {len(blob)} bytes, expected {expected}")
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if crc != zlib.crc32(blob[:-4]):
        raise CheckpointError("CRC mismatch")
    name = tag.rstrip(b"\0").decode("ascii", errors="replace")
    if name not in GROUP_NAMES:
        raise CheckpointError(f"unknown group tag {name!r}")
    data = np.frombuffer(blob, dtype="<c16", count=2 * count, offset=_HEADER.size)
    alpha = data[:count].reshape(N, N, n, n).astype(complex)
    phi = data[count:].reshape(N, N, n, n).astype(complex)
    try:
        return HiggsPair.from_arrays(make_grid(N), alpha, phi, descriptor(name, n))
    except Exception as exc:  # invalid grid or group data inside a well-formed file
        raise CheckpointError(f"checkpoint content rejected: {exc}") from exc


def save_checkpoint(path, pair: HiggsPair) -> None:
    Path(path).write_bytes(checkpoint_bytes(pair))


def load_checkpoint(path) -> HiggsPair:
    return pair_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------


class ConfigError(ValueError):
    """Malformed or unknown configuration entry; ``key`` names the culprit."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _posint(v):
    return isinstance(v, int) and not isinstance(v, bool) and v > 0


def _posnum(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0


def _nonneg(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0


CONFIG_KEYS = {
    "grid.N": (_posint, "a positive even integer"),
    "scenario.name": (lambda v: isinstance(v, str), "a scenario name"),
    "group.name": (lambda v: v in GROUP_NAMES, f"one of {GROUP_NAMES}"),
    "flow.dt": (lambda v: v == "auto" or _posnum(v), "'auto' or a positive number"),
    "flow.t_max": (_nonneg, "a non-negative number"),
    "flow.tol_grad": (_nonneg, "a non-negative number"),
    "flow.integrator": (lambda v: v in INTEGRATORS, f"one of {INTEGRATORS}"),
    "flow.monitor_every": (_posint, "a positive integer"),
    "flow.dealias": (lambda v: isinstance(v, bool), "a boolean"),
    "flow.allow_non_higgs": (lambda v: isinstance(v, bool), "a boolean"),
    "flow.max_steps": (_posint, "a positive integer"),
    "output.dir": (lambda v: isinstance(v, str), "a path"),
    "output.formats": (lambda v: isinstance(v, list) and set(v) <= {"csv", "json", "ckpt"},
                       "a list drawn from csv, json, ckpt"),
    "seed": (lambda v: isinstance(v, int) and not isinstance(v, bool), "an integer"),
    "deterministic": (lambda v: isinstance(v, bool), "a boolean"),
}
PARAM_PREFIX = "scenario.params."
SWEEP_PREFIX = "sweep."


@dataclass
class RunConfig:
    N: int = 32
    scenario: str = "S1"
    params: dict = field(default_factory=dict)
    group: str | None = None
    flow: FlowConfig = field(default_factory=FlowConfig)
    output_dir: str = "run"
    formats: tuple = ("csv", "json", "ckpt")
    seed: int = 0
    deterministic: bool = False
    sweep: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, mapping: dict, allow_sweep: bool = False) -> "RunConfig":
        """Validate flat keys and build a configuration.

        Raises
        ------
        ConfigError
            Naming the first unknown or ill-typed key.
        """
        if not isinstance(mapping, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        flow_kw, params, sweep = {}, {}, {}
        cfg = cls(raw=dict(mapping))
        for key, value in mapping.items():
            if key.startswith(PARAM_PREFIX) and len(key) > len(PARAM_PREFIX):
                params[key[len(PARAM_PREFIX):]] = value
                continue
            if key.startswith(SWEEP_PREFIX):
                target = key[len(SWEEP_PREFIX):]
                if not allow_sweep:
                    raise ConfigError(key, "sweep keys are only accepted by the sweep command")
                if target not in CONFIG_KEYS and not target.startswith(PARAM_PREFIX):
                    raise ConfigError(key, f"unknown sweep target {target!r}")
                if not isinstance(value, list):
                    raise ConfigError(key, "sweep values must be a list")
                for v in value:
                    _check(target, v)
                sweep[target] = value
                continue
            if key not in CONFIG_KEYS:
                raise ConfigError(key, "unknown key")
            _check(key, value)
            section, _, name = key.partition(".")
            if section == "flow":
                flow_kw[name] = value
            elif key == "grid.N":
                cfg.N = value
            elif key == "scenario.name":
                cfg.scenario = value
            elif key == "group.name":
                cfg.group = value
            elif key == "output.dir":
                cfg.output_dir = value
            elif key == "output.formats":
                cfg.formats = tuple(value)
            elif key == "seed":
                cfg.seed = value
            elif key == "deterministic":
                cfg.deterministic = value
        cfg.params = params
        cfg.sweep = sweep
        try:
            cfg.flow = FlowConfig(**flow_kw)
        except ValueError as exc:
            raise ConfigError("flow", str(exc)) from exc
        return cfg

    def to_mapping(self) -> dict:
        return dict(self.raw)

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """A new (non-sweep) configuration with some flat keys replaced."""
        raw = {k: v for k, v in self.raw.items() if not k.startswith(SWEEP_PREFIX)}
        raw.update(overrides)
        return RunConfig.from_mapping(raw)


def _check(key: str, value) -> None:
    if key.startswith(PARAM_PREFIX):
        return
    ok, what = CONFIG_KEYS[key]
    if not ok(value):
        raise ConfigError(key, f"expected {what}, got {value!r}")


def load_config(path, allow_sweep: bool = False) -> RunConfig:
    """Read a flat-keyed JSON configuration file."""
    text = Path(path).read_text()
    try:
        mapping = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    return RunConfig.from_mapping(mapping, allow_sweep=allow_sweep)
