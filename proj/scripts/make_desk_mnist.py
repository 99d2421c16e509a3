#!/usr/bin/env python3
"""Build a desk-scale MNIST split in IDX format.

Source: the digit JSON files shipped in the npm ``mnist`` package
(``npm pack mnist``), which hold 10,000 MNIST digits as 784-element arrays of
pixel/255 rounded to three decimals. The bytes are recovered with
round(255 * v), shuffled with a fixed seed, and written as gzip-compressed
IDX files: 5000 training and 5000 test images.

Usage: make_desk_mnist.py <path/to/package/src/digits> <output dir>
"""

import gzip
import json
import pathlib
import random
import struct
import sys


def write_idx_images(path, images):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    digits_dir = pathlib.Path(sys.argv[1])
    out_dir = pathlib.Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)

    samples = []
    for label in range(10):
        data = json.loads((digits_dir / f"{label}.json").read_text())["data"]
        assert len(data) % 784 == 0
        for i in range(0, len(data), 784):
            pixels = [min(255, max(0, round(255 * v))) for v in data[i:i + 784]]
            samples.append((pixels, label))

    random.Random(20240601).shuffle(samples)
    train, test = samples[:5000], samples[5000:10000]
    for name, part in (("train", train), ("t10k", test)):
        write_idx_images(out_dir / f"{name}-images-idx3-ubyte.gz", [s[0] for s in part])
        write_idx_labels(out_dir / f"{name}-labels-idx1-ubyte.gz", [s[1] for s in part])
    print(f"wrote {len(train)} train / {len(test)} test images to {out_dir}")


if __name__ == "__main__":
    main()
