"""Single-file model container.

Layout (all integers little-endian)::

    b"AHCR1"  u16 version  u32 n_tensors
    per tensor:  u16 name_len  name(utf-8)  u8 ndim  u32 dims[ndim]
    payload:     float32 elements of every tensor, in catalog order
    32-byte SHA-256 of everything above

Names are namespaced by section: ``cnn/...`` for the network and
``svm/...`` for the optional SVM head.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .model import PARAM_ORDER, Model
from .svm import SvmModel

MAGIC = b"AHCR1"
VERSION = 1
_DIGEST = 32


class ContainerError(ValueError):
    """Malformed or corrupt container file."""


def dumps(tensors: dict[str, np.ndarray]) -> bytes:
    header = [MAGIC, struct.pack("<HI", VERSION, len(tensors))]
    payload = []
    for name, arr in tensors.items():
        raw = name.encode("utf-8")
        arr = np.asarray(arr)
        header.append(struct.pack("<H", len(raw)) + raw)
        header.append(struct.pack(f"<B{arr.ndim}I", arr.ndim, *arr.shape))
        payload.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    body = b"".join(header) + b"".join(payload)
    return body + hashlib.sha256(body).digest()


def loads(blob: bytes) -> dict[str, np.ndarray]:
    if len(blob) < len(MAGIC) + 6 + _DIGEST or not blob.startswith(MAGIC):
        raise ContainerError("not a model container (bad magic)")
    body, digest = blob[:-_DIGEST], blob[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise ContainerError("checksum mismatch: container is corrupt")
    version, count = struct.unpack_from("<HI", body, len(MAGIC))
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    pos = len(MAGIC) + 6
    catalog = []
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", body, pos)
            pos += 2
            name = body[pos:pos + name_len].decode("utf-8")
            pos += name_len
            (ndim,) = struct.unpack_from("<B", body, pos)
            shape = struct.unpack_from(f"<{ndim}I", body, pos + 1)
            pos += 1 + 4 * ndim
            catalog.append((name, shape))
        out = {}
        for name, shape in catalog:
            size = int(np.prod(shape, dtype=np.int64))
            end = pos + 4 * size
            if end > len(body):
                raise ContainerError("truncated payload")
            out[name] = np.frombuffer(body, dtype="<f4", count=size, offset=pos).reshape(shape).copy()
            pos = end
    except (struct.error, UnicodeDecodeError) as exc:
        raise ContainerError(f"malformed catalog: {exc}") from None
    if pos != len(body):
        raise ContainerError("trailing bytes after payload")
    return out


def save(path, tensors: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(dumps(tensors))


def load(path) -> dict[str, np.ndarray]:
    return loads(Path(path).read_bytes())


# ------------------------------------------------------------ recognizer I/O

def pack(model: Model, svm: SvmModel | None = None) -> dict[str, np.ndarray]:
    tensors = {f"cnn/{name}": model.params[name] for name in PARAM_ORDER}
    tensors["cnn/dropout_rate"] = np.array([model.dropout.rate])
    if svm is not None:
        tensors.update({
            "svm/weights": svm.weights, "svm/bias": svm.bias,
            "svm/mean": svm.mean, "svm/scale": svm.scale,
            "svm/reg_lambda": np.array([svm.reg_lambda]),
        })
    return tensors


def unpack(tensors: dict[str, np.ndarray], precision="float32") -> tuple[Model, SvmModel | None]:
    missing = [n for n in PARAM_ORDER if f"cnn/{n}" not in tensors]
    if missing:
        raise ContainerError(f"container lacks network tensors {missing}")
    rate = float(tensors["cnn/dropout_rate"][0]) if "cnn/dropout_rate" in tensors else 0.5
    model = Model.from_params({n: tensors[f"cnn/{n}"] for n in PARAM_ORDER}, rate, precision)
    svm = None
    if "svm/weights" in tensors:
        svm = SvmModel(
            tensors["svm/weights"].astype(np.float64), tensors["svm/bias"].astype(np.float64),
            float(tensors["svm/reg_lambda"][0]),
            tensors["svm/mean"].astype(np.float64), tensors["svm/scale"].astype(np.float64),
        )
    return model, svm


def save_recognizer(path, model: Model, svm: SvmModel | None = None) -> None:
    save(path, pack(model, svm))


def load_recognizer(path, precision="float32") -> tuple[Model, SvmModel | None]:
    return unpack(load(path), precision)
