"""Extract the 5000-digit MNIST sample shipped inside the mlxtend wheel into gzipped IDX files.

    pip download --no-deps -d /tmp/pd mlxtend==0.24.0
    python3 scripts/extract_mnist_subset.py /tmp/pd/mlxtend-0.24.0-py3-none-any.whl data/mnist5k

The CSV has one row per digit: 784 pixel values then the label.
"""

import argparse
import gzip
import io
import zipfile
from pathlib import Path

import numpy as np

from t3cen.datasets import write_idx

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("wheel")
    ap.add_argument("out", nargs="?", default="data/mnist5k")
    args = ap.parse_args()
    with zipfile.ZipFile(args.wheel) as zf:
        raw = gzip.decompress(zf.read(MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    images = table[:, :784].reshape(-1, 28, 28).astype(np.uint8)
    labels = table[:, 784].astype(np.uint8)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(out / "images-idx3-ubyte.gz", images)
    write_idx(out / "labels-idx1-ubyte.gz", labels)
    print(f"wrote {len(labels)} digits to {out}; class counts {np.bincount(labels, minlength=10).tolist()}")


if __name__ == "__main__":
    main()
