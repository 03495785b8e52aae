"""Versioned binary vocabulary files with per-entry checksums.

Layout, all little-endian:

    magic   4 bytes  "AVTP"
    u16     format version (currently 1)
    u16     feature order p
    u16     segment count m
    u16     entry count
    entries, each:
        u16     label byte length
        bytes   UTF-8 label
        u8      utterances the template was trained from
        f64     m * p matrix values, segment-major
        u32     CRC-32 of everything above in the entry

Writes go to a temp file in the same directory followed by an atomic
rename, so a crash mid-write leaves any previous file intact.
"""

from __future__ import annotations

import os
import struct
import zlib

import numpy as np

from .errors import CorruptEntry, IoFailure, MixedDimensions, UnsupportedVersion
from .matcher import Template

MAGIC = b"AVTP"
VERSION = 1

_HEADER = struct.Struct("<4sHHHH")
_LABEL_LEN = struct.Struct("<H")
_TRAINED = struct.Struct("<B")
_CRC = struct.Struct("<I")


def _as_template_list(templates) -> list[Template]:
    if isinstance(templates, dict):
        templates = templates.values()
    return list(templates)


def _encode_entry(t: Template) -> bytes:
    label = t.label.encode("utf-8")
    if len(label) > 0xFFFF:
        raise ValueError(f"label too long: {len(label)} bytes")
    if not 0 <= t.trained_from <= 0xFF:
        raise ValueError(f"trained_from {t.trained_from} does not fit one byte")
    matrix = np.ascontiguousarray(t.key_features.T, dtype="<f8")  # m rows of p
    body = (_LABEL_LEN.pack(len(label)) + label
            + _TRAINED.pack(t.trained_from) + matrix.tobytes())
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def save_vocabulary(templates, path) -> None:
    """Write templates to path atomically, sorted by label.

    Raises:
        MixedDimensions: templates disagree on order or segment count.
        ValueError: empty set, duplicate labels, or non-finite values.
        IoFailure: underlying filesystem error.
    """
    items = sorted(_as_template_list(templates), key=lambda t: t.label)
    if not items:
        raise ValueError("refusing to save an empty vocabulary")
    labels = [t.label for t in items]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate labels: {sorted(labels)}")
    p, m = items[0].key_features.shape
    for t in items:
        if t.key_features.shape != (p, m):
            raise MixedDimensions(
                f"template {t.label!r} is {t.key_features.shape}, expected {(p, m)}")
        if not np.isfinite(t.key_features).all():
            raise ValueError(f"template {t.label!r} contains non-finite values")

    blob = _HEADER.pack(MAGIC, VERSION, p, m, len(items))
    blob += b"".join(_encode_entry(t) for t in items)

    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise IoFailure(f"could not write {path}: {exc}") from exc


def _take(data: bytes, off: int, n: int, what: str) -> tuple[bytes, int]:
    chunk = data[off:off + n]
    if len(chunk) < n:
        raise CorruptEntry(f"truncated while reading {what}")
    return chunk, off + n


def load_vocabulary(path) -> dict[str, Template]:
    """Read a vocabulary file back into {label: Template}.

    Raises:
        IoFailure: file unreadable.
        UnsupportedVersion: version field is not 1.
        CorruptEntry: any structural or checksum failure.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"could not read {path}: {exc}") from exc

    if len(data) < _HEADER.size:
        raise CorruptEntry(f"{path}: header truncated")
    magic, version, p, m, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CorruptEntry(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"{path}: version {version}, this build reads {VERSION}")
    if p < 1 or m < 1:
        raise CorruptEntry(f"{path}: impossible dimensions p={p} m={m}")

    matrix_bytes = m * p * 8
    vocab: dict[str, Template] = {}
    off = _HEADER.size
    for _ in range(count):
        entry_start = off
        raw, off = _take(data, off, _LABEL_LEN.size, "label length")
        (label_len,) = _LABEL_LEN.unpack(raw)
        label_raw, off = _take(data, off, label_len, "label")
        trained_raw, off = _take(data, off, _TRAINED.size, "training count")
        matrix_raw, off = _take(data, off, matrix_bytes, "matrix")
        crc_raw, off = _take(data, off, _CRC.size, "checksum")
        (stored_crc,) = _CRC.unpack(crc_raw)
        if zlib.crc32(data[entry_start:off - _CRC.size]) & 0xFFFFFFFF != stored_crc:
            raise CorruptEntry(f"{path}: checksum mismatch in entry at byte {entry_start}")
        try:
            label = label_raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptEntry(f"{path}: undecodable label at byte {entry_start}") from exc
        if label in vocab:
            raise CorruptEntry(f"{path}: duplicate label {label!r}")
        matrix = np.frombuffer(matrix_raw, dtype="<f8").reshape(m, p).T.copy()
        if not np.isfinite(matrix).all():
            raise CorruptEntry(f"{path}: non-finite values in entry {label!r}")
        (trained_from,) = _TRAINED.unpack(trained_raw)
        vocab[label] = Template(label=label, key_features=matrix,
                                m_segments=m, trained_from=trained_from)

    if off != len(data):
        raise CorruptEntry(f"{path}: {len(data) - off} trailing bytes")
    return vocab


def export_text(vocab: dict[str, Template], fh) -> None:
    """Human-readable dump, one block per template, full float precision."""
    for label in sorted(vocab):
        t = vocab[label]
        p, m = t.key_features.shape
        fh.write(f"template {label}\n")
        fh.write(f"trained_from {t.trained_from}\n")
        fh.write(f"segments {m} order {p}\n")
        for seg in range(m):
            row = " ".join("%.17g" % v for v in t.key_features[:, seg])
            fh.write(row + "\n")
        fh.write("\n")
