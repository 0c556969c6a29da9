"""Binary checkpoint file.

Little-endian layout, in order:

    magic "SEDH", u16 format version, 32-byte sha256 of the run config
    f64 t, h, period_ref and the nine state components (r, p, S)
    i64 steps, steps left in the orbit segment, push count, cutoff updates
    u8 t>N warning issued, u64 time-series bytes and rows written so far
    three length-prefixed records: mode-bank snapshot, event log (JSON), config (JSON)
    sha256 of all preceding bytes

The trailing digest detects truncation or corruption before any state is used.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"SEDH"
VERSION = 1

# magic, version, config hash
_PREFIX = struct.Struct("<4sH32s")
# t, h, period_ref, y[9], steps, seg_left, push_count, cutoff_updates, warned,
# csv_bytes, csv_rows
_HEAD = struct.Struct("<3d9dqqqqBQQ")
_LEN = struct.Struct("<Q")
_DIGEST = 32


class CheckpointError(ValueError):
    """Unreadable, corrupt, incompatible or mismatched checkpoint."""


@dataclass
class Checkpoint:
    config_hash: bytes
    t: float
    h: float
    period_ref: float
    y: np.ndarray
    steps: int
    seg_left: int
    push_count: int
    cutoff_updates: int
    warned: bool
    csv_bytes: int
    csv_rows: int
    bank: bytes
    events: list
    config: dict


def encode(cp: Checkpoint) -> bytes:
    parts = [
        _PREFIX.pack(MAGIC, VERSION, cp.config_hash),
        _HEAD.pack(
            cp.t, cp.h, cp.period_ref, *[float(v) for v in cp.y],
            cp.steps, cp.seg_left, cp.push_count, cp.cutoff_updates, int(cp.warned),
            cp.csv_bytes, cp.csv_rows,
        ),
    ]
    for blob in (
        cp.bank,
        json.dumps(cp.events, sort_keys=True).encode(),
        json.dumps(cp.config, sort_keys=True).encode(),
    ):
        parts += [_LEN.pack(len(blob)), blob]
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


def decode(blob: bytes) -> Checkpoint:
    if len(blob) < _PREFIX.size:
        raise CheckpointError(f"checkpoint truncated: {len(blob)} bytes")
    magic, version, config_hash = _PREFIX.unpack_from(blob, 0)
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    if len(blob) < _PREFIX.size + _HEAD.size + 3 * _LEN.size + _DIGEST:
        raise CheckpointError(f"checkpoint truncated: {len(blob)} bytes")
    body, digest = blob[:-_DIGEST], blob[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checkpoint checksum mismatch (truncated or corrupt file)")
    head = _HEAD.unpack_from(body, _PREFIX.size)
    pos = _PREFIX.size + _HEAD.size
    blobs = []
    for _ in range(3):
        (n,) = _LEN.unpack_from(body, pos)
        pos += _LEN.size
        if pos + n > len(body):
            raise CheckpointError("checkpoint record overruns the file")
        blobs.append(body[pos : pos + n])
        pos += n
    if pos != len(body):
        raise CheckpointError("trailing bytes in checkpoint")
    t, h, period_ref = head[0:3]
    y = np.array(head[3:12])
    steps, seg_left, pushes, updates, warned, csv_bytes, csv_rows = head[12:]
    try:
        events = json.loads(blobs[1])
        config = json.loads(blobs[2])
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint metadata unreadable: {exc}") from None
    return Checkpoint(
        config_hash, t, h, period_ref, y, steps, seg_left, pushes, updates, bool(warned),
        csv_bytes, csv_rows, blobs[0], events, config,
    )


def write_checkpoint(cp: Checkpoint, path) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(encode(cp))
    tmp.replace(path)


def read_checkpoint(path) -> Checkpoint:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    return decode(blob)
