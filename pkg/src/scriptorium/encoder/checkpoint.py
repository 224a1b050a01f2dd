"""Single-file encoder checkpoints.

Layout (little-endian)::

    8 bytes   magic b"SCRPTENC"
    uint32    format version
    uint32    header length in bytes
    header    UTF-8 JSON: spec, provenance, tensor table (name, shape, dtype)
    payload   float32 tensors, contiguous, in tensor-table order
"""
import json
import struct
from pathlib import Path

import numpy as np
import torch

MAGIC = b"SCRPTENC"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, state_dict, spec, provenance):
    table = []
    chunks = []
    for name, tensor in state_dict.items():
        arr = tensor.detach().cpu().numpy()
        table.append({"name": name, "shape": list(arr.shape), "dtype": str(arr.dtype)})
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    header = json.dumps(
        {"spec": spec, "provenance": provenance, "tensors": table},
        sort_keys=True, separators=(",", ":"),
    ).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header)))
        fh.write(header)
        for chunk in chunks:
            fh.write(chunk)


def load_checkpoint(path):
    """Return ``(state_dict, spec, provenance)``."""
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise CheckpointError(f"{path} is not an encoder checkpoint")
    if len(blob) < 16:
        raise CheckpointError(f"{path} is truncated")
    version, header_len = struct.unpack_from("<II", blob, 8)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    if len(blob) < 16 + header_len:
        raise CheckpointError(f"{path} is truncated inside the header")
    header = json.loads(blob[16:16 + header_len])
    offset = 16 + header_len
    state = {}
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        end = offset + 4 * count
        if end > len(blob):
            raise CheckpointError(f"{path} is truncated at tensor {entry['name']!r}")
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(entry["shape"])
        state[entry["name"]] = torch.from_numpy(arr.astype(entry["dtype"]))
        offset = end
    if offset != len(blob):
        raise CheckpointError(f"{path} has {len(blob) - offset} trailing bytes")
    return state, header["spec"], header["provenance"]
