"""Checkpoint I/O: a text manifest next to a raw little-endian float32 blob.

The manifest at ``path`` lists one ``param`` line per tensor with its
shape and byte offset into ``path + ".blob"``; values are stored
contiguously in row-major order.  Loading reproduces the arrays and the
run metadata exactly, so reruns with the same seed are byte-identical.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .tensor import DTYPE, Tensor

FORMAT_TAG = "floordesc-checkpoint-v1"


def _array_of(value) -> np.ndarray:
    return value.data if isinstance(value, Tensor) else np.asarray(value)


def save_checkpoint(path, params: dict, model_type: str, seed: int, step: int = 0):
    """Write manifest + blob for a name->Tensor/array mapping."""
    path = Path(path)
    blob_path = path.with_name(path.name + ".blob")
    lines = [
        f"format = {FORMAT_TAG}",
        f"model_type = {model_type}",
        f"seed = {seed}",
        f"step = {step}",
    ]
    offset = 0
    chunks = []
    for name, value in params.items():
        arr = _array_of(value).astype("<f4")
        shape = ",".join(str(d) for d in arr.shape) or "scalar"
        lines.append(f"param\t{name}\t{shape}\t{offset}")
        raw = arr.tobytes(order="C")
        chunks.append(raw)
        offset += len(raw)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    blob_path.write_bytes(b"".join(chunks))


def load_checkpoint(path):
    """Read a manifest + blob pair; returns (name->float32 array, meta dict)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint manifest not found: {path}")
    blob_path = path.with_name(path.name + ".blob")
    if not blob_path.exists():
        raise FileNotFoundError(f"checkpoint blob not found: {blob_path}")
    blob = blob_path.read_bytes()
    meta: dict[str, str] = {}
    arrays: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("param\t"):
            try:
                _, name, shape_text, offset_text = line.split("\t")
                shape = () if shape_text == "scalar" else tuple(
                    int(d) for d in shape_text.split(",")
                )
                offset = int(offset_text)
            except ValueError as exc:
                raise ValueError(f"bad param line {lineno} in {path}: {line!r}") from exc
            count = int(np.prod(shape)) if shape else 1
            end = offset + 4 * count
            if end > len(blob):
                raise ValueError(
                    f"checkpoint blob too short for parameter {name!r} "
                    f"(need {end} bytes, have {len(blob)})"
                )
            arr = np.frombuffer(blob[offset:end], dtype="<f4").reshape(shape)
            arrays[name] = arr.astype(DTYPE)
        elif "=" in line:
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
        else:
            raise ValueError(f"unrecognized manifest line {lineno} in {path}: {line!r}")
    if meta.get("format") != FORMAT_TAG:
        raise ValueError(f"not a recognized checkpoint manifest: {path}")
    meta["seed"] = int(meta.get("seed", 0))
    meta["step"] = int(meta.get("step", 0))
    return arrays, meta
