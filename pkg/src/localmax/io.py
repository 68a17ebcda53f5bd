"""Binary and JSON formats.

Mask file: 16-byte header ``b"LMAXMASK"``, ``uint16`` n, three ``uint16``
dims (unused dims 0), then one byte per cell in row-major order.

Field file: ``b"LMAXFLD\\0"``, ``uint32`` n, three ``uint32`` dims, ``int64``
mantissa and ``int32`` scale of ``h``, then little-endian float64 samples in
row-major order.
"""
import csv
import json
import os
import struct
from pathlib import Path

import numpy as np

from .dyadic import decode, encode, to_fraction
from .geometry import (
    Domain,
    DomainError,
    box_annulus,
    half_space_clip,
    open_box,
    punctured_square,
)
from .fields import ScalarField

__all__ = [
    "FormatError",
    "write_mask",
    "read_mask",
    "write_field",
    "read_field",
    "read_field_csv",
    "domain_to_json",
    "domain_from_json",
    "load_domain",
    "save_domain",
    "dump_json",
    "write_json",
    "write_csv",
]

MASK_MAGIC = b"LMAXMASK"
FIELD_MAGIC = b"LMAXFLD\0"
_MASK_HEAD = struct.Struct("<8sHHHH")
_FIELD_HEAD = struct.Struct("<8sIIIIqi")

PRESETS = {
    "punctured-square": punctured_square,
    "box-annulus": box_annulus,
    "half-space-clip": half_space_clip,
    "open-box": open_box,
}


class FormatError(ValueError):
    """Malformed file or config."""


def _dims(shape):
    if not 1 <= len(shape) <= 3:
        raise FormatError("only 1 to 3 dimensions are supported")
    return tuple(shape) + (0,) * (3 - len(shape))


def write_mask(path, mask):
    mask = np.asarray(mask, dtype=bool)
    with open(path, "wb") as fh:
        fh.write(_MASK_HEAD.pack(MASK_MAGIC, mask.ndim, *_dims(mask.shape)))
        fh.write(np.ascontiguousarray(mask, dtype=np.uint8).tobytes())


def read_mask(path):
    data = Path(path).read_bytes()
    if len(data) < _MASK_HEAD.size:
        raise FormatError("truncated mask header")
    magic, n, *dims = _MASK_HEAD.unpack_from(data)
    if magic != MASK_MAGIC or not 1 <= n <= 3:
        raise FormatError("not a mask file")
    shape = tuple(dims[:n])
    body = np.frombuffer(data, dtype=np.uint8, offset=_MASK_HEAD.size)
    if body.size != int(np.prod(shape)):
        raise FormatError("mask body does not match its header")
    return body.reshape(shape).astype(bool)


def write_field(path, field):
    vals = np.asarray(field.values, dtype="<f8")
    h = encode(field.domain.h)
    with open(path, "wb") as fh:
        fh.write(_FIELD_HEAD.pack(FIELD_MAGIC, vals.ndim, *_dims(vals.shape), h["mantissa"], h["scale"]))
        fh.write(np.ascontiguousarray(vals).tobytes())


def read_field(path, domain=None):
    """Values (and ``h``) from a field file; wrapped as a :class:`ScalarField` when ``domain`` is given."""
    data = Path(path).read_bytes()
    if len(data) < _FIELD_HEAD.size:
        raise FormatError("truncated field header")
    magic, n, d0, d1, d2, mant, scale = _FIELD_HEAD.unpack_from(data)
    if magic != FIELD_MAGIC or not 1 <= n <= 3:
        raise FormatError("not a field file")
    shape = (d0, d1, d2)[:n]
    body = np.frombuffer(data, dtype="<f8", offset=_FIELD_HEAD.size)
    if body.size != int(np.prod(shape)):
        raise FormatError("field body does not match its header")
    vals = body.reshape(shape).astype(float)
    h = decode({"mantissa": mant, "scale": scale})
    if domain is None:
        return vals, h
    if domain.shape != shape or domain.h != h:
        raise FormatError("field grid does not match the domain")
    return ScalarField(domain, vals)


def read_field_csv(path, domain):
    """One-dimensional field from a single-column (or ``x,value``) CSV file."""
    if domain.n != 1:
        raise FormatError("CSV fields are only defined for n = 1")
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append(float(row[-1]))
            except ValueError:
                if rows:
                    raise FormatError(f"bad CSV value {row!r}") from None
    if len(rows) != domain.shape[0]:
        raise FormatError("CSV length does not match the grid")
    return ScalarField(domain, np.array(rows))


def domain_to_json(domain, mask_path=None):
    obj = domain.to_json(mask_path)
    obj["shape"] = list(domain.shape)
    return obj


def domain_from_json(obj, base_dir="."):
    """Domain from either a full spec or ``{"preset": name, "cells": N, "dimension": n}``."""
    try:
        if "preset" in obj:
            if obj["preset"] not in PRESETS:
                raise FormatError(f"unknown preset {obj['preset']!r}")
            return PRESETS[obj["preset"]](int(obj.get("cells", 64)), n=int(obj.get("dimension", 2)))
        n = int(obj["dimension"])
        kind = obj["kind"]
        lo = [to_fraction(v) for v in obj["bbox"]["lo"]]
        hi = [to_fraction(v) for v in obj["bbox"]["hi"]]
        h = to_fraction(obj["h"])
        shape = [int((b - a) / h) for a, b in zip(lo, hi)]
        if any(a + s * h != b for a, s, b in zip(lo, shape, hi)):
            raise FormatError("bounding box is not a whole number of cells")
        if kind == "mask":
            mask = read_mask(Path(base_dir) / obj["mask_path"])
            return Domain(n, "mask", lo, h, shape, mask=mask)
        params = {}
        for k, v in obj.get("params", {}).items():
            params[k] = tuple(to_fraction(x) for x in v) if isinstance(v, list) else (
                to_fraction(v) if isinstance(v, dict) else v)
        return Domain(n, kind, lo, h, shape, params=params)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (FormatError, DomainError)):
            raise
        raise FormatError(f"malformed domain spec: {exc}") from exc


def load_domain(path):
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return domain_from_json(obj, path.parent)


def save_domain(domain, path, mask_name=None):
    path = Path(path)
    mask_path = None
    if domain.kind == "mask":
        mask_path = mask_name or path.with_suffix(".mask").name
        write_mask(path.parent / mask_path, domain.mask)
    write_json(path, domain_to_json(domain, mask_path))


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "numerator") and hasattr(o, "denominator"):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dump_json(obj):
    """Canonical JSON text (sorted keys, fixed separators) so reruns are byte-identical."""
    return json.dumps(obj, sort_keys=True, indent=1, default=_default, allow_nan=False) + "\n"


def write_json(path, obj):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(dump_json(obj))
    os.replace(tmp, path)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(x) for x in r])


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x
