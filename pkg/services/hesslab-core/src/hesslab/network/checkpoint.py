# =============================================================================
# hesslab - Checkpoint and Array Files
# =============================================================================
"""
Binary files made of one JSON header line followed by a raw little-endian
``float64`` block.

Model checkpoints carry ``{"kind": "model", "layer_dims", "seed", "epoch"}``
and the flat ``[W | b]`` parameter vector; matrix files carry
``{"kind": "array", "shape"}`` plus any caller metadata.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..core.errors import FormatError
from .model import MlpModel

PathLike = Union[str, Path]
LE_F64 = np.dtype("<f8")


def _write(path: PathLike, header: Dict[str, Any], data: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    line = json.dumps(header, sort_keys=True).encode("utf-8") + b"\n"
    with open(path, "wb") as f:
        f.write(line)
        f.write(np.ascontiguousarray(data, dtype=LE_F64).tobytes())
    return path


def _read(path: PathLike) -> Tuple[Dict[str, Any], np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, "rb") as f:
        line = f.readline()
        payload = f.read()
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"bad header in {path}: {e}") from e
    if len(payload) % LE_F64.itemsize:
        raise FormatError(f"truncated parameter block in {path}")
    return header, np.frombuffer(payload, dtype=LE_F64).astype(np.float64)


def save_checkpoint(path: PathLike, model: MlpModel, seed: int, epoch: int) -> Path:
    header = {"kind": "model", "layer_dims": list(model.layer_dims), "seed": int(seed), "epoch": int(epoch)}
    return _write(path, header, model.flatten())


def load_checkpoint(path: PathLike) -> Tuple[MlpModel, Dict[str, Any]]:
    header, data = _read(path)
    if header.get("kind") != "model" or "layer_dims" not in header:
        raise FormatError(f"{path} is not a model checkpoint")
    dims = tuple(header["layer_dims"])
    template = MlpModel(dims, [np.zeros((dims[p + 1], dims[p])) for p in range(len(dims) - 1)], [np.zeros(d) for d in dims[1:]])
    if data.size != template.param_count:
        raise FormatError(f"{path}: expected {template.param_count} parameters, found {data.size}")
    return template.with_params(data), header


def save_array(path: PathLike, array: np.ndarray, metadata: Optional[Dict[str, Any]] = None) -> Path:
    array = np.asarray(array, dtype=np.float64)
    header = {"kind": "array", "shape": list(array.shape), **(metadata or {})}
    return _write(path, header, array.ravel())


def load_array(path: PathLike) -> Tuple[np.ndarray, Dict[str, Any]]:
    header, data = _read(path)
    if header.get("kind") != "array":
        raise FormatError(f"{path} is not an array file")
    shape = tuple(header["shape"])
    if int(np.prod(shape)) != data.size:
        raise FormatError(f"{path}: shape {shape} does not match {data.size} values")
    return data.reshape(shape), header
