"""Model persistence: JSON manifest plus a raw little-endian float32 blob.

Two files per model, ``<path>.json`` and ``<path>.bin``. The blob holds
every parameter tensor (including batchnorm running statistics) in
manifest order, row-major, 32-bit little-endian. The manifest records the
architecture, the ordered tensor list with shapes, and a SHA-256 digest of
the blob. Writes are atomic: temp file then rename, blob before manifest.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from .data import LabelMap
from .errors import StoreError
from .network import Model, ModelSpec

FORMAT_VERSION = 1

_KIND_BY_HEAD = {10: "digits", 28: "letters"}


def _ordered_tensors(model: Model) -> list[tuple[str, np.ndarray]]:
    out = []
    for i, (conv, bn) in enumerate(model.blocks):
        out.append((f"block{i}.conv.kernels", conv.kernels))
        out.append((f"block{i}.conv.bias", conv.bias))
        out.append((f"block{i}.bn.gamma", bn.gamma))
        out.append((f"block{i}.bn.beta", bn.beta))
        out.append((f"block{i}.bn.running_mean", bn.running_mean))
        out.append((f"block{i}.bn.running_var", bn.running_var))
    out.append(("dense.weights", model.dense.weights))
    out.append(("dense.bias", model.dense.bias))
    return out


def _atomic_write(path: str, payload: bytes):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise StoreError(f"failed writing {path}: {exc}") from exc


def manifest_paths(path: str) -> tuple[str, str]:
    return path + ".json", path + ".bin"


def save_model(model: Model, path: str, kind: str | None = None,
               class_names: tuple[str, ...] | None = None,
               train_config: dict | None = None) -> dict:
    """Write ``<path>.json`` + ``<path>.bin``; returns the manifest dict."""
    spec = model.spec
    if kind is None:
        kind = _KIND_BY_HEAD.get(spec.num_classes, f"head{spec.num_classes}")
    if class_names is None:
        class_names = LabelMap.for_head(spec.num_classes).names
    tensors = _ordered_tensors(model)
    blob = b"".join(
        np.ascontiguousarray(t, dtype="<f4").tobytes() for _name, t in tensors
    )
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "side": spec.side,
        "class_names": list(class_names),
        "architecture": {
            "conv_filters": list(spec.conv_filters),
            "activation": spec.activation,
            "dropout_rate": spec.dropout_rate,
            "bn_momentum": spec.bn_momentum,
            "bn_epsilon": spec.bn_epsilon,
            "num_classes": spec.num_classes,
        },
        "tensors": [{"name": n, "shape": list(t.shape)} for n, t in tensors],
        "param_count": int(sum(t.size for _n, t in tensors)),
        "blob_digest": "sha256:" + hashlib.sha256(blob).hexdigest(),
        "train_config": train_config,
    }
    mpath, bpath = manifest_paths(path)
    _atomic_write(bpath, blob)
    _atomic_write(mpath, (json.dumps(manifest, indent=2) + "\n").encode("utf-8"))
    return manifest


def load_model(path: str) -> tuple[Model, dict]:
    """Read back a manifest + blob pair, validating version, length, digest,
    and shape consistency. The result is ready for eval-mode inference."""
    mpath, bpath = manifest_paths(path)
    try:
        with open(mpath, "r", encoding="utf-8") as f:
            manifest = json.load(f)
        with open(bpath, "rb") as f:
            blob = f.read()
    except OSError as exc:
        raise StoreError(f"cannot read model at {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise StoreError(f"manifest {mpath} is not valid JSON: {exc}") from exc

    if manifest.get("format_version") != FORMAT_VERSION:
        raise StoreError(
            f"unknown format_version {manifest.get('format_version')!r}, "
            f"expected {FORMAT_VERSION}"
        )
    digest = "sha256:" + hashlib.sha256(blob).hexdigest()
    if digest != manifest["blob_digest"]:
        raise StoreError("blob digest mismatch: file corrupted or edited")
    expected_bytes = 4 * sum(
        int(np.prod(t["shape"])) for t in manifest["tensors"]
    )
    if len(blob) != expected_bytes:
        raise StoreError(
            f"blob is {len(blob)} bytes, manifest declares {expected_bytes}"
        )

    arch = manifest["architecture"]
    spec = ModelSpec(
        num_classes=arch["num_classes"],
        side=manifest["side"],
        conv_filters=tuple(arch["conv_filters"]),
        activation=arch["activation"],
        dropout_rate=arch["dropout_rate"],
        bn_momentum=arch["bn_momentum"],
        bn_epsilon=arch["bn_epsilon"],
    )
    model = Model(spec, dtype=np.float32)
    want = {n: t for n, t in _ordered_tensors(model)}
    offset = 0
    for entry in manifest["tensors"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in want:
            raise StoreError(f"manifest tensor {name!r} not in the architecture")
        target = want[name]
        if target.shape != shape:
            raise StoreError(
                f"tensor {name}: manifest shape {shape} != architecture {target.shape}"
            )
        nbytes = 4 * int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<f4", count=int(np.prod(shape)),
                            offset=offset).reshape(shape)
        target[...] = arr
        offset += nbytes
    for _conv, bn in model.blocks:
        bn.initialized = True
    return model, manifest
