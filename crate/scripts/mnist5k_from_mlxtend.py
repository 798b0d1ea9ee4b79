#!/usr/bin/env python3
"""Convert the 5,000-sample MNIST subset bundled with mlxtend into IDX files.

Usage: mnist5k_from_mlxtend.py <mlxtend wheel> <output dir>

The subset (500 images per digit, BSD-3 licensed) lives at
mlxtend/data/data/mnist_5k.csv.gz: 784 pixel columns followed by the label.
"""
import gzip
import io
import struct
import sys
import zipfile

import numpy as np


def main(wheel, out_dir):
    raw = zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")
    table = np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",")
    pixels = table[:, :-1].astype(np.uint8)
    labels = table[:, -1].astype(np.uint8)
    n = len(labels)
    with open(f"{out_dir}/images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(pixels.tobytes())
    with open(f"{out_dir}/labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.tobytes())


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
