#!/usr/bin/env python3
# Copyright 2026 The dyngrow Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts the 5,000-image MNIST sample shipped with mlxtend into gzipped IDX.

Usage: make_mnist_subset.py <mnist_5k.csv.gz> <out_dir>

Each CSV row holds 784 pixel values followed by the class label.
"""
import gzip
import struct
import sys


def main(src, out_dir):
    images, labels = [], []
    with gzip.open(src, "rt") as f:
        for line in f:
            vals = [int(v) for v in line.strip().split(",")]
            images.append(bytes(vals[:-1]))
            labels.append(vals[-1])
    n = len(labels)
    with gzip.GzipFile(f"{out_dir}/mnist5k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 2051, n, 28, 28))
        for img in images:
            f.write(img)
    with gzip.GzipFile(f"{out_dir}/mnist5k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 2049, n))
        f.write(bytes(labels))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
