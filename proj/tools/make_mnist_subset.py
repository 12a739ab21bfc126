#!/usr/bin/env python3
# Copyright 2026 The vqgan Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes a 5000-image MNIST subset as gzipped IDX files.

The subset (500 images per digit) ships inside the mlxtend wheel. When the
full MNIST IDX files are available, point the configs at those instead.

Usage: make_mnist_subset.py OUT_DIR [--wheel PATH]

Without --wheel the script runs `pip download mlxtend` into a temp dir.
The first 400 images of each class become the train split, the last 100
the test split.
"""

import argparse
import collections
import gzip
import pathlib
import struct
import subprocess
import sys
import tempfile
import zipfile

CSV_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"
TRAIN_PER_CLASS = 400


def find_wheel(explicit):
    if explicit:
        return pathlib.Path(explicit)
    tmp = pathlib.Path(tempfile.mkdtemp())
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "mlxtend", "--no-deps", "-d", str(tmp)],
        check=True,
    )
    return next(tmp.glob("mlxtend-*.whl"))


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + payload)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("out_dir")
    parser.add_argument("--wheel")
    args = parser.parse_args()

    wheel = find_wheel(args.wheel)
    raw = gzip.decompress(zipfile.ZipFile(wheel).read(CSV_MEMBER)).decode()

    seen = collections.Counter()
    split = {"train": ([], []), "t10k": ([], [])}
    for line in raw.splitlines():
        fields = line.split(",")
        label = int(float(fields[-1]))
        pixels = bytes(int(float(v)) for v in fields[:-1])
        name = "train" if seen[label] < TRAIN_PER_CLASS else "t10k"
        seen[label] += 1
        split[name][0].append(pixels)
        split[name][1].append(label)

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, (images, labels) in split.items():
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 0x803, [len(images), 28, 28], b"".join(images))
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 0x801, [len(labels)], bytes(labels))
        print(f"{name}: {len(images)} images")


if __name__ == "__main__":
    main()
