#!/usr/bin/env python3
"""Convert a torchvision classifier into an encoder tensor archive.

The archive is what `octskin train --encoder-weights` and
`ModelSpec::encoder_weights` read: the magic bytes OCTSKCK1, a little-endian
uint32 header length, a JSON header and the raw tensor bytes.

Only encoder tensors are kept. Classifier heads (fc, classifier, AuxLogits)
are dropped because the segmentation decoder replaces them.

Examples:
    export_encoder_weights.py --arch resnet34_unet --out resnet34.enc
    export_encoder_weights.py --arch vgg16_unet --state-dict vgg16_bn.pth --out vgg.enc
    export_encoder_weights.py --arch inceptionv3_unet --random --seed 3 --out inc.enc
"""

import argparse
import json
import struct
import sys

import torch
import torchvision

MAGIC = b"OCTSKCK1"

# arch -> (torchvision constructor, weights enum name, dropped key prefixes)
ARCHS = {
    "vgg16_unet": ("vgg16_bn", "VGG16_BN_Weights", ("classifier.", "avgpool.")),
    "resnet34_unet": ("resnet34", "ResNet34_Weights", ("fc.",)),
    "inceptionv3_unet": ("inception_v3", "Inception_V3_Weights", ("fc.", "AuxLogits.")),
}

DTYPES = {torch.float32: "f32", torch.int64: "i64"}


def build_classifier(arch, random_init, state_dict_path):
    ctor_name, weights_name, _ = ARCHS[arch]
    ctor = getattr(torchvision.models, ctor_name)
    kwargs = {"init_weights": True} if arch == "inceptionv3_unet" else {}
    if random_init or state_dict_path:
        model = ctor(weights=None, **kwargs)
        if state_dict_path:
            model.load_state_dict(torch.load(state_dict_path, map_location="cpu"))
    else:
        weights = getattr(torchvision.models, weights_name).DEFAULT
        model = ctor(weights=weights)
    return model


def encoder_state(arch, model):
    dropped = ARCHS[arch][2]
    state = {}
    for name, tensor in model.state_dict().items():
        if name.startswith(dropped):
            continue
        t = tensor.detach().cpu().contiguous()
        if t.dtype not in DTYPES:
            t = t.to(torch.float32)
        state[name] = t
    return state


def write_archive(path, meta, state):
    header = {"meta": meta, "tensors": []}
    chunks = []
    offset = 0
    for name, t in state.items():
        raw = t.numpy().tobytes()
        header["tensors"].append(
            {"name": name, "dtype": DTYPES[t.dtype], "shape": list(t.shape), "offset": offset}
        )
        chunks.append(raw)
        offset += len(raw)
    encoded = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(encoded)))
        f.write(encoded)
        for raw in chunks:
            f.write(raw)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--arch", required=True, choices=sorted(ARCHS))
    p.add_argument("--out", required=True)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--state-dict", help="local torchvision state_dict (.pth) instead of a download")
    src.add_argument("--random", action="store_true", help="random initialization (format tests)")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    torch.manual_seed(args.seed)
    model = build_classifier(args.arch, args.random, args.state_dict)
    state = encoder_state(args.arch, model)
    write_archive(args.out, {"kind": "encoder", "arch": args.arch}, state)
    print(f"{args.out}: {len(state)} tensors for {args.arch}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
