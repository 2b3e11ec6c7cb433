#!/usr/bin/env python3
"""Write a stratified MNIST subset as an IDX image/label pair.

Input is a CSV (optionally gzipped) with 784 pixel columns followed by the
label column, e.g. the 5k MNIST extract shipped with mlxtend
(mlxtend/data/data/mnist_5k.csv.gz).
"""
import argparse
import gzip
import struct
from pathlib import Path

import numpy as np


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("out_dir")
    ap.add_argument("--per-class", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    opener = gzip.open if args.csv.endswith(".gz") else open
    with opener(args.csv, "rt") as f:
        table = np.loadtxt(f, delimiter=",")
    pixels = table[:, :-1].astype(np.uint8)
    labels = table[:, -1].astype(np.uint8)

    rng = np.random.default_rng(args.seed)
    picked = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        picked.extend(rng.choice(idx, size=args.per_class, replace=False))
    picked = np.array(picked)
    rng.shuffle(picked)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = len(picked)
    with open(out / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        f.write(pixels[picked].tobytes())
    with open(out / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(labels[picked].tobytes())
    print(f"wrote {n} samples to {out}")


if __name__ == "__main__":
    main()
