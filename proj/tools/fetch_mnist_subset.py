#!/usr/bin/env python3
"""Write the 5,000-image MNIST subset bundled with the mlxtend wheel as IDX files.

The full MNIST distribution works with every nntopo command as well; this
subset exists so the desk-scale runs and the acceptance suite have data in
environments without access to the original download mirrors.

Usage: tools/fetch_mnist_subset.py [output_dir]   (default: data/mnist5k)
"""
import glob
import gzip
import os
import struct
import subprocess
import sys
import tempfile
import zipfile


def main() -> int:
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join("data", "mnist5k")
    os.makedirs(out_dir, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "--quiet",
             "mlxtend", "-d", tmp],
            check=True)
        wheel = glob.glob(os.path.join(tmp, "mlxtend-*.whl"))[0]
        with zipfile.ZipFile(wheel) as zf:
            raw = gzip.decompress(zf.read("mlxtend/data/data/mnist_5k.csv.gz"))

    rows = [line.split(",") for line in raw.decode().strip().splitlines()]
    images = bytearray()
    labels = bytearray()
    for row in rows:
        images.extend(int(float(v)) for v in row[:-1])
        labels.append(int(float(row[-1])))
    n = len(rows)

    with open(os.path.join(out_dir, "images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        f.write(images)
    with open(os.path.join(out_dir, "labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(labels)
    print(f"wrote {n} images to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
