"""JSON files for channels and tensors.

Complex entries are ``[re, im]`` pairs. Floats are written with Python's
shortest round-trip repr, so reading back a written file gives the same
binary values.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channel import KrausChannel
from .errors import DfsKitError, DimensionError
from .mps import MpsTensor, WeightedTensor


class ParseError(DfsKitError):
    """Malformed input file."""


def encode_complex(z) -> list:
    z = complex(z)
    return [float(z.real) + 0.0, float(z.imag) + 0.0]


def encode_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[encode_complex(x) for x in row] for row in m]


def decode_complex(x, where: str = "entry") -> complex:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if (not isinstance(x, list) or len(x) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)):
        raise ParseError(f"{where}: expected [re, im], got {x!r}")
    return complex(x[0], x[1])


def decode_matrix(rows, where: str = "matrix") -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ParseError(f"{where}: expected a nonempty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParseError(f"{where}: rows have different lengths")
    out = np.empty((len(rows), width), dtype=complex)
    for i, r in enumerate(rows):
        for j, x in enumerate(r):
            out[i, j] = decode_complex(x, f"{where}[{i}][{j}]")
    if not np.all(np.isfinite(out)):
        raise ParseError(f"{where}: non-finite entry")
    return out


def _load(path) -> object:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def _dump(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


def channel_to_json(channel: KrausChannel) -> dict:
    return {"dim": channel.dim, "kraus": [encode_matrix(e) for e in channel.kraus]}


def channel_from_json(obj, where: str = "channel") -> KrausChannel:
    if not isinstance(obj, dict) or "kraus" not in obj:
        raise ParseError(f"{where}: expected an object with a 'kraus' list")
    kraus = obj["kraus"]
    if not isinstance(kraus, list) or not kraus:
        raise ParseError(f"{where}: 'kraus' must be a nonempty list")
    mats = [decode_matrix(k, f"{where}.kraus[{i}]") for i, k in enumerate(kraus)]
    dim = obj.get("dim", mats[0].shape[0])
    if not isinstance(dim, int) or isinstance(dim, bool):
        raise ParseError(f"{where}: 'dim' must be an integer")
    for i, m in enumerate(mats):
        if m.shape != (dim, dim):
            raise ParseError(f"{where}.kraus[{i}] has shape {m.shape}, expected ({dim}, {dim})")
    try:
        return KrausChannel(tuple(mats))
    except DimensionError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def read_channel(path) -> KrausChannel:
    return channel_from_json(_load(path), str(path))


def write_channel(path, channel: KrausChannel) -> None:
    _dump(path, channel_to_json(channel))


def tensor_to_json(t: MpsTensor | WeightedTensor) -> dict:
    weight = None
    if isinstance(t, WeightedTensor):
        if len(t.weights) != 1:
            raise ValueError("a tensor file holds a single weight")
        weight = t.weights[0]
        t = t.tensor
    out = {"phys_dim": t.phys_dim, "bond_dim": t.bond_dim,
           "matrices": [encode_matrix(a) for a in t.matrices]}
    if weight is not None:
        out["weight"] = encode_complex(weight)
    return out


def tensor_from_json(obj, where: str = "tensor") -> WeightedTensor:
    if not isinstance(obj, dict) or "matrices" not in obj:
        raise ParseError(f"{where}: expected an object with a 'matrices' list")
    mats = obj["matrices"]
    if not isinstance(mats, list) or not mats:
        raise ParseError(f"{where}: 'matrices' must be a nonempty list")
    arrs = [decode_matrix(a, f"{where}.matrices[{i}]") for i, a in enumerate(mats)]
    for key, want in (("phys_dim", len(arrs)), ("bond_dim", arrs[0].shape[0])):
        if key in obj and obj[key] != want:
            raise ParseError(f"{where}: {key} = {obj[key]!r} but the matrices imply {want}")
    for i, a in enumerate(arrs):
        if a.shape != arrs[0].shape or a.shape[0] != a.shape[1]:
            raise ParseError(f"{where}.matrices[{i}] has shape {a.shape}")
    weight = decode_complex(obj["weight"], f"{where}.weight") if "weight" in obj else 1.0
    try:
        return WeightedTensor(MpsTensor(tuple(arrs)), (weight,))
    except DimensionError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def read_tensor(path) -> WeightedTensor:
    return tensor_from_json(_load(path), str(path))


def write_tensor(path, t: MpsTensor | WeightedTensor) -> None:
    _dump(path, tensor_to_json(t))


def read_tensor_list(path) -> list[WeightedTensor]:
    """A JSON list of tensor objects, or an object with a ``tensors`` list."""
    obj = _load(path)
    if isinstance(obj, dict):
        obj = obj.get("tensors")
    if not isinstance(obj, list) or not obj:
        raise ParseError(f"{path}: expected a nonempty list of tensors")
    return [tensor_from_json(t, f"{path}[{i}]") for i, t in enumerate(obj)]


def write_tensor_list(path, tensors) -> None:
    _dump(path, [tensor_to_json(t) for t in tensors])
