import json
import struct
import zlib

import numpy as np
import pytest

import oracles
from ymhflow.errors import CheckpointError
from ymhflow.flow import FlowConfig
from ymhflow.groups import descriptor
from ymhflow.higgs import HiggsPair
from ymhflow.persist import (
    CONFIG_KEYS,
    FORMAT_VERSION,
    MAGIC,
    ConfigError,
    RunConfig,
    checkpoint_bytes,
    load_checkpoint,
    load_config,
    pair_from_bytes,
    save_checkpoint,
)
from ymhflow.torus import make_grid

HEADER = struct.Struct("<4sIII4s")


def pair(group="SO", n=3, N=8, seed=0):
    rng = np.random.default_rng(seed)
    G = descriptor(group, n)
    a = G.project(oracles.random_field(rng, N, n, 3))
    f = G.project(oracles.random_field(rng, N, n, 3))
    return HiggsPair.from_arrays(make_grid(N), a, f, G)


def with_crc(body: bytes) -> bytes:
    return body + struct.pack("<I", zlib.crc32(body))


@pytest.mark.parametrize("group,n", [("GL", 3), ("SL", 2), ("SO", 3), ("SP", 4)])
def test_roundtrip_bit_exact(tmp_path, group, n):
    p = pair(group, n)
    path = tmp_path / "x.ckpt"
    save_checkpoint(path, p)
    q = load_checkpoint(path)
    assert q.group == p.group and q.grid == p.grid
    assert q.alpha.data.tobytes() == p.alpha.data.tobytes()
    assert q.phi.data.tobytes() == p.phi.data.tobytes()
    assert checkpoint_bytes(q) == path.read_bytes()


def test_layout_decoded_independently():
    p = pair("SO", 3, N=8)
    blob = checkpoint_bytes(p)
    magic, version, N, n, tag = HEADER.unpack_from(blob)
    assert (magic, version, N, n, tag) == (b"YMHF", 1, 8, 3, b"SO\0\0")
    assert MAGIC == b"YMHF" and FORMAT_VERSION == 1
    count = N * N * n * n
    assert len(blob) == HEADER.size + 2 * count * 16 + 4
    assert struct.unpack_from("<I", blob, len(blob) - 4)[0] == zlib.crc32(blob[:-4])
    # (re, im) float64 pairs, site-major (x index, then y index), row-major matrices
    raw = struct.unpack_from(f"<{4 * count}d", blob, HEADER.size)
    vals = np.array(raw[0::2]) + 1j * np.array(raw[1::2])
    alpha = vals[:count].reshape(N, N, n, n)
    phi = vals[count:].reshape(N, N, n, n)
    assert vals[1] == p.alpha.data[0, 0, 0, 1]
    assert vals[n * n] == p.alpha.data[0, 1, 0, 0]
    np.testing.assert_array_equal(alpha, p.alpha.data)
    np.testing.assert_array_equal(phi, p.phi.data)


def test_rejects_truncated_and_corrupted():
    blob = checkpoint_bytes(pair())
    with pytest.raises(CheckpointError, match="truncated"):
        pair_from_bytes(blob[:10])
    with pytest.raises(CheckpointError):
        pair_from_bytes(blob[:-100])
    flipped = bytearray(blob)
    flipped[HEADER.size + 5] ^= 0x01
    with pytest.raises(CheckpointError, match="CRC"):
        pair_from_bytes(bytes(flipped))
    with pytest.raises(CheckpointError, match="magic"):
        pair_from_bytes(with_crc(b"XXXX" + blob[4:-4]))


def test_rejects_version_and_tag():
    blob = checkpoint_bytes(pair())
    body = bytearray(blob[:-4])
    struct.pack_into("<I", body, 4, 2)
    with pytest.raises(CheckpointError, match="version"):
        pair_from_bytes(with_crc(bytes(body)))
    body = bytearray(blob[:-4])
    body[16:20] = b"E8\0\0"
    with pytest.raises(CheckpointError, match="group tag"):
        pair_from_bytes(with_crc(bytes(body)))
    # well-formed file whose content leaves the declared subalgebra
    body = bytearray(blob[:-4])
    body[16:20] = b"SP\0\0"
    with pytest.raises(CheckpointError):
        pair_from_bytes(with_crc(bytes(body)))


def test_config_defaults_and_parsing():
    cfg = RunConfig.from_mapping({
        "grid.N": 16, "scenario.name": "S5", "scenario.params.R": 0.4, "scenario.params.d": 2,
        "flow.dt": "auto", "flow.t_max": 3.0, "flow.integrator": "ETD-Euler", "flow.dealias": True,
        "output.dir": "out", "output.formats": ["csv", "json"], "seed": 7, "deterministic": True,
    })
    assert cfg.N == 16 and cfg.scenario == "S5" and cfg.params == {"R": 0.4, "d": 2}
    assert cfg.flow == FlowConfig(dt="auto", t_max=3.0, integrator="ETD-Euler", dealias=True)
    assert cfg.formats == ("csv", "json") and cfg.seed == 7 and cfg.deterministic
    assert json.loads(json.dumps(cfg.to_mapping())) == cfg.raw
    d = RunConfig.from_mapping({})
    assert d.N == 32 and d.scenario == "S1" and d.flow == FlowConfig()


@pytest.mark.parametrize("mapping,key", [
    ({"grid.n": 16}, "grid.n"),
    ({"flow.tmax": 1}, "flow.tmax"),
    ({"grid.N": "big"}, "grid.N"),
    ({"flow.integrator": "Euler"}, "flow.integrator"),
    ({"flow.dt": -1}, "flow.dt"),
    ({"deterministic": 1}, "deterministic"),
    ({"output.formats": ["png"]}, "output.formats"),
    ({"sweep.flow.dt": [0.1]}, "sweep.flow.dt"),
])
def test_config_errors_name_the_key(mapping, key):
    with pytest.raises(ConfigError) as info:
        RunConfig.from_mapping(mapping)
    assert info.value.key == key
    assert key in str(info.value)


def test_sweep_config():
    cfg = RunConfig.from_mapping({"sweep.flow.dt": [0.1, 0.2], "sweep.scenario.params.c0": [1, 2]},
                                 allow_sweep=True)
    assert cfg.sweep == {"flow.dt": [0.1, 0.2], "scenario.params.c0": [1, 2]}
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"sweep.flow.dx": [1]}, allow_sweep=True)
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"sweep.flow.dt": 0.1}, allow_sweep=True)
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"sweep.flow.dt": [0.1, -1]}, allow_sweep=True)


def test_with_overrides():
    cfg = RunConfig.from_mapping({"grid.N": 16, "sweep.flow.dt": [0.1]}, allow_sweep=True)
    new = cfg.with_overrides({"flow.dt": 0.1})
    assert new.flow.dt == 0.1 and new.N == 16 and new.sweep == {}


def test_load_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"grid.N": 16}')
    assert load_config(path).N == 16
    path.write_text("{grid.N: 16")
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(path)


def test_documented_keys():
    assert {"grid.N", "scenario.name", "group.name", "flow.dt", "flow.t_max", "flow.tol_grad",
            "flow.integrator", "flow.monitor_every", "output.dir", "output.formats", "seed",
            "deterministic"} <= set(CONFIG_KEYS)
