#!/usr/bin/env python3
"""Pack the 10k-digit MNIST subset shipped with the npm `mnist` package into
standard IDX files (gzip). The last 100 samples of every digit form the test
split; the rest form the training split. Samples are interleaved by a fixed
permutation so that prefixes of either split stay class-balanced."""
import argparse
import gzip
import json
import os
import struct

import numpy as np


def write_idx(path, arr, kind):
    with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
        if kind == "images":
            n, rows, cols = arr.shape
            f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        else:
            f.write(struct.pack(">II", 0x00000801, arr.shape[0]))
        f.write(arr.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--digits", required=True, help="npm mnist package src/digits directory")
    ap.add_argument("--out", required=True)
    ap.add_argument("--test-per-class", type=int, default=100)
    args = ap.parse_args()

    train_x, train_y, test_x, test_y = [], [], [], []
    for d in range(10):
        raw = np.asarray(json.load(open(os.path.join(args.digits, f"{d}.json")))["data"], dtype=np.float64)
        imgs = np.rint(raw.reshape(-1, 28, 28) * 255.0).clip(0, 255).astype(np.uint8)
        k = args.test_per_class
        train_x.append(imgs[:-k]); train_y += [d] * (len(imgs) - k)
        test_x.append(imgs[-k:]); test_y += [d] * k

    rng = np.random.default_rng(20240601)
    for name, xs, ys in (("train", train_x, train_y), ("t10k", test_x, test_y)):
        x = np.concatenate(xs); y = np.asarray(ys)
        perm = rng.permutation(len(y))
        os.makedirs(args.out, exist_ok=True)
        write_idx(os.path.join(args.out, f"{name}-images-idx3-ubyte.gz"), x[perm], "images")
        write_idx(os.path.join(args.out, f"{name}-labels-idx1-ubyte.gz"), y[perm], "labels")
        print(name, len(y))


if __name__ == "__main__":
    main()
