#!/usr/bin/env python3
"""Convert a CSV of MNIST digits into IDX image/label files.

Input rows hold 784 pixel values (0-255) followed by the label, which is the
layout of ``mnist_5k.csv.gz`` bundled with the mlxtend wheel::

    pip download mlxtend==0.24.0 --no-deps -d /tmp/mlx
    python3 -c "import zipfile; zipfile.ZipFile(next(__import__('pathlib').Path('/tmp/mlx').glob('*.whl'))) \\
        .extract('mlxtend/data/data/mnist_5k.csv.gz', '/tmp/mlx')"
    python3 scripts/make_mnist_idx.py /tmp/mlx/mlxtend/data/data/mnist_5k.csv.gz

The first ``--n-train`` rows become ``train-*`` files, the next ``--n-test``
rows ``t10k-*`` files, in the standard MNIST file names.
"""
from __future__ import annotations

import argparse
import gzip
import os
from pathlib import Path

import numpy as np

from gdae.io import write_idx

DEFAULT_OUT = Path(os.environ.get("GDAE_MNIST_DIR", Path.home() / ".cache" / "gdae" / "mnist"))


def read_rows(path: Path) -> np.ndarray:
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt") as f:
        return np.loadtxt(f, delimiter=",", dtype=np.int64)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", type=Path)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--n-train", type=int, default=4000)
    ap.add_argument("--n-test", type=int, default=1000)
    args = ap.parse_args(argv)

    rows = read_rows(args.csv)
    if rows.shape[1] != 785:
        raise SystemExit(f"expected 785 columns (784 pixels + label), got {rows.shape[1]}")
    if args.n_train + args.n_test > len(rows):
        raise SystemExit(f"only {len(rows)} rows available")
    images = rows[:, :784].reshape(-1, 28, 28).astype(np.uint8)
    labels = rows[:, 784].astype(np.uint8)
    args.out.mkdir(parents=True, exist_ok=True)
    splits = {"train": slice(0, args.n_train), "t10k": slice(args.n_train, args.n_train + args.n_test)}
    for name, sl in splits.items():
        write_idx(args.out / f"{name}-images-idx3-ubyte", images[sl])
        write_idx(args.out / f"{name}-labels-idx1-ubyte", labels[sl])
        print(f"{name}: {len(images[sl])} images -> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
