"""Model containers and run manifests.

Model files are a versioned binary container: magic line, a little-
endian header length, a JSON header (kind, metadata, array directory),
then the parameter arrays as 8-byte little-endian floats in directory
order. Writing is byte-deterministic for fixed inputs.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import nn
from .core import PitchlabError
from .eventmodel import EventCodec, LemChain, MajModel

MAGIC = b"PLMODEL1\n"
FORMAT_VERSION = 1


class ArtifactError(PitchlabError, ValueError):
    pass


def _pack(kind: str, arrays: Sequence[Tuple[str, np.ndarray]], meta: dict) -> bytes:
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "meta": meta,
        "arrays": [{"name": name, "shape": list(a.shape)} for name, a in arrays],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<Q", len(header_bytes)), header_bytes]
    for _, array in arrays:
        parts.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
    return b"".join(parts)


def _unpack(data: bytes) -> Tuple[str, Dict[str, np.ndarray], dict]:
    if not data.startswith(MAGIC):
        raise ArtifactError("not a model container (bad magic)")
    offset = len(MAGIC)
    (header_len,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    header = json.loads(data[offset : offset + header_len].decode("utf-8"))
    if header.get("format_version") != FORMAT_VERSION:
        raise ArtifactError(f"unsupported container version {header.get('format_version')}")
    offset += header_len
    arrays: Dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        array = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        arrays[entry["name"]] = array.reshape(shape).astype(np.float64)
        offset += count * 8
    return header["kind"], arrays, header["meta"]


def _mlp_arrays(prefix: str, model: nn.Mlp) -> List[Tuple[str, np.ndarray]]:
    arrays = []
    for i, layer in enumerate(model.layers):
        arrays.append((f"{prefix}layer{i}_w", layer.w))
        arrays.append((f"{prefix}layer{i}_b", layer.b))
    return arrays


def _mlp_meta(model: nn.Mlp) -> dict:
    return {
        "seed": model.seed,
        "activations": [layer.activation for layer in model.layers],
    }


def _mlp_from(prefix: str, arrays: Dict[str, np.ndarray], meta: dict) -> nn.Mlp:
    layers = []
    for i, activation in enumerate(meta["activations"]):
        layers.append(
            nn.Layer(
                w=arrays[f"{prefix}layer{i}_w"].copy(),
                b=arrays[f"{prefix}layer{i}_b"].copy(),
                activation=activation,
            )
        )
    return nn.Mlp(layers=layers, seed=int(meta["seed"]))


def save_mlp(path: Union[str, Path], model: nn.Mlp, kind: str = "mlp",
             config_echo: Optional[dict] = None) -> None:
    meta = {"model": _mlp_meta(model), "config": config_echo or {}}
    Path(path).write_bytes(_pack(kind, _mlp_arrays("", model), meta))


def save_lem_chain(path: Union[str, Path], chain: LemChain,
                   config_echo: Optional[dict] = None) -> None:
    arrays: List[Tuple[str, np.ndarray]] = []
    metas = {}
    for name, model in chain.models():
        arrays.extend(_mlp_arrays(f"{name}.", model))
        metas[name] = _mlp_meta(model)
    meta = {
        "models": metas,
        "context_depth": chain.context_depth,
        "codec": asdict(chain.codec),
        "config": config_echo or {},
    }
    Path(path).write_bytes(_pack("lem_chain", arrays, meta))


def save_maj(path: Union[str, Path], model: MajModel,
             config_echo: Optional[dict] = None) -> None:
    meta = {"model": asdict(model), "config": config_echo or {}}
    Path(path).write_bytes(_pack("maj", [], meta))


def load_model(path: Union[str, Path]):
    """Load any saved model; returns MajModel, LemChain or Mlp."""
    kind, arrays, meta = _unpack(Path(path).read_bytes())
    if kind == "maj":
        return MajModel(**meta["model"])
    if kind == "lem_chain":
        models = {
            name: _mlp_from(f"{name}.", arrays, model_meta)
            for name, model_meta in meta["models"].items()
        }
        return LemChain(
            model_a=models["action"],
            model_b=models["flags"],
            model_c=models["location"],
            context_depth=int(meta["context_depth"]),
            codec=EventCodec(**meta["codec"]),
        )
    if kind in ("mlp", "q_network"):
        return _mlp_from("", arrays, meta["model"])
    raise ArtifactError(f"unknown model kind {kind!r}")


def model_config_echo(path: Union[str, Path]) -> dict:
    _, _, meta = _unpack(Path(path).read_bytes())
    return meta.get("config", {})


def write_run_manifest(
    out_dir: Union[str, Path],
    command: str,
    inputs: dict,
    config_echo: dict,
    seed: Optional[int],
    wall_time_s: float,
    outputs: Sequence[str],
    warnings: Sequence[str] = (),
) -> Path:
    """One JSON manifest per run, alongside the outputs."""
    from . import __version__

    manifest = {
        "command": command,
        "inputs": inputs,
        "config": config_echo,
        "seed": seed,
        "version": __version__,
        "wall_time_s": round(wall_time_s, 3),
        "outputs": list(outputs),
        "warnings": list(warnings),
        "written_at_unix": int(time.time()),
    }
    path = Path(out_dir) / f"{command.replace(' ', '_')}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path
