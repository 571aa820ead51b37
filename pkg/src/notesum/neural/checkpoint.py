"""Model checkpoints: a zip of one JSON header and one .npy per tensor.

Entries carry a fixed timestamp so identical models give identical bytes.
"""

from __future__ import annotations

import io
import json
import zipfile

import numpy as np

from ..errors import DataError
from .model import ModelConfig, ModelParams

FORMAT = "notesum-model"
VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


def _entry(name: str) -> zipfile.ZipInfo:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    return info


def save_checkpoint(params: ModelParams, path, extra: dict | None = None) -> None:
    header = {"format": FORMAT, "version": VERSION, "config": params.config.to_dict(),
              "vocab": params.vocab, "tensors": sorted(params.tensors), "extra": extra or {}}
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr(_entry("header.json"), json.dumps(header, sort_keys=True, indent=1))
        for name in sorted(params.tensors):
            buf = io.BytesIO()
            np.save(buf, params.tensors[name], allow_pickle=False)
            zf.writestr(_entry(f"tensors/{name}.npy"), buf.getvalue())


def load_checkpoint(path, table=None) -> ModelParams:
    try:
        with zipfile.ZipFile(path) as zf:
            header = json.loads(zf.read("header.json"))
            if header.get("format") != FORMAT:
                raise DataError(f"{path} is not a {FORMAT} checkpoint")
            if header.get("version") != VERSION:
                raise DataError(f"unsupported checkpoint version {header.get('version')}")
            tensors = {name: np.load(io.BytesIO(zf.read(f"tensors/{name}.npy")), allow_pickle=False)
                       for name in header["tensors"]}
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"unreadable checkpoint {path}: {exc}") from None
    return ModelParams(ModelConfig(**header["config"]), header["vocab"], tensors, table)
