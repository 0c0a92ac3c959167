#!/usr/bin/env python3
"""Export a torchvision ResNet-18 state dict as a gliotype backbone weight
artifact (the checksummed tensor container described in
docs/checkpoint_format.md).

Usage:
    python tools/export_backbone_weights.py resnet18.pth resnet18.glw
    python tools/export_backbone_weights.py --download resnet18.glw

The source may be a state-dict .pth file; --download fetches the torchvision
reference weights instead (needs network access and torchvision).
"""

import argparse
import json
import struct
import sys

MAGIC = b"GLIOTNSR"
VERSION = 1
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes, state: int = FNV_OFFSET) -> int:
    for b in data:
        state ^= b
        state = (state * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return state


def map_name(key: str):
    """torchvision resnet18 state-dict key -> gliotype tensor name."""
    if key.startswith("fc.") or key.endswith("num_batches_tracked"):
        return None
    parts = key.split(".")

    def bn_field(field: str) -> str:
        return {"weight": "gamma", "bias": "beta",
                "running_mean": "running_mean", "running_var": "running_var"}[field]

    if parts[0] == "conv1":
        return "backbone.conv1.weight"
    if parts[0] == "bn1":
        return "backbone.bn1." + bn_field(parts[1])
    if parts[0].startswith("layer"):
        layer, block, mod = parts[0], parts[1], parts[2]
        if mod.startswith("conv"):
            return f"backbone.{layer}.{block}.{mod}.weight"
        if mod.startswith("bn"):
            return f"backbone.{layer}.{block}.{mod}." + bn_field(parts[3])
        if mod == "downsample":
            if parts[3] == "0":
                return f"backbone.{layer}.{block}.downsample.conv.weight"
            return f"backbone.{layer}.{block}.downsample.bn." + bn_field(parts[4])
    raise KeyError(f"unrecognized state-dict key: {key}")


def write_container(path: str, tensors, meta: dict) -> None:
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<I", VERSION)
    meta_bytes = json.dumps(meta, separators=(",", ":"), sort_keys=True).encode()
    buf += struct.pack("<Q", len(meta_bytes))
    buf += meta_bytes
    buf += struct.pack("<I", len(tensors))
    for name, array in tensors:
        name_bytes = name.encode()
        buf += struct.pack("<I", len(name_bytes))
        buf += name_bytes
        buf += struct.pack("<I", len(array.shape))
        for d in array.shape:
            buf += struct.pack("<I", d)
        payload = array.astype("<f4").tobytes()
        buf += struct.pack("<Q", len(payload))
        buf += payload
    buf += struct.pack("<Q", fnv1a64(bytes(buf)))
    with open(path, "wb") as f:
        f.write(buf)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("source", nargs="?", help="state-dict .pth file")
    ap.add_argument("output", help="output .glw artifact")
    ap.add_argument("--download", action="store_true",
                    help="fetch torchvision reference weights instead of reading a file")
    args = ap.parse_args()

    import numpy as np  # noqa: F401  (torch tensors convert through numpy)
    import torch

    if args.download:
        from torchvision.models import ResNet18_Weights, resnet18
        state = resnet18(weights=ResNet18_Weights.IMAGENET1K_V1).state_dict()
    else:
        if not args.source:
            ap.error("either a source .pth file or --download is required")
        state = torch.load(args.source, map_location="cpu", weights_only=True)
        if hasattr(state, "state_dict"):
            state = state.state_dict()

    tensors = []
    for key, value in state.items():
        name = map_name(key)
        if name is None:
            continue
        tensors.append((name, value.detach().cpu().numpy()))
    tensors.sort(key=lambda kv: kv[0])

    write_container(args.output, tensors, {"kind": "backbone-weights", "arch": "resnet18"})
    print(f"wrote {len(tensors)} tensors to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
