"""Datasets, synthetic generators and file formats (IDX, PGM, CSV)."""
from __future__ import annotations

import csv
import gzip
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chain import ChainRun
from .distributions import ProbVector, SampleKind, categorical_index
from .errors import FormatError
from .rng import RngStream, box_muller

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801
IDX_MAX_BYTES = 1 << 34
SEPARATOR_GRAY = 128

# Canonical non-uniform K=10 target for the discrete experiment:
# p ∝ 0.05 + u**2 with u = RngStream(2013, 0).uniforms(10), rounded to 6 decimals.
DEFAULT_TARGET = (0.017271, 0.278519, 0.018432, 0.172510, 0.048368,
                  0.257663, 0.060119, 0.034026, 0.065031, 0.048061)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Uniform-variant samples: ``(n,)`` int states, ``(n, d)`` uint8 bits or ``(n, d)`` floats."""

    samples: np.ndarray
    name: str = ""
    source: str = ""

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ValueError("dataset is empty")

    @property
    def kind(self) -> SampleKind:
        s = self.samples
        if s.ndim == 1:
            return SampleKind.DISCRETE
        return SampleKind.BINARY if s.dtype == np.uint8 else SampleKind.REAL

    @property
    def d(self) -> int:
        return 1 if self.samples.ndim == 1 else self.samples.shape[1]

    def __len__(self):
        return len(self.samples)


# -- IDX ----------------------------------------------------------------------

def read_idx(path) -> np.ndarray:
    """Raw uint8 array from an IDX file (magic 0x801 or 0x803)."""
    raw = Path(path).read_bytes()
    if str(path).endswith(".gz"):
        raw = gzip.decompress(raw)
    if len(raw) < 4:
        raise FormatError(f"{path}: bad magic (file shorter than 4 bytes)")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic == IDX_IMAGES:
        ndim = 3
    elif magic == IDX_LABELS:
        ndim = 1
    else:
        raise FormatError(f"{path}: bad magic 0x{magic:08x}")
    head = 4 + 4 * ndim
    if len(raw) < head:
        raise FormatError(f"{path}: truncated header, expected {head} bytes, got {len(raw)}")
    dims = struct.unpack(f">{ndim}I", raw[4:head])
    expected = math.prod(dims)
    if expected > IDX_MAX_BYTES:
        raise FormatError(f"{path}: dimension overflow ({' x '.join(map(str, dims))})")
    actual = len(raw) - head
    if actual != expected:
        raise FormatError(f"{path}: truncated payload, expected {expected} bytes, got {actual}")
    return np.frombuffer(raw, dtype=np.uint8, offset=head).reshape(dims)


def write_idx(path, arr) -> None:
    a = np.asarray(arr, dtype=np.uint8)
    if a.ndim == 3:
        magic = IDX_IMAGES
    elif a.ndim == 1:
        magic = IDX_LABELS
    else:
        raise ValueError("IDX writer supports 1-D labels or 3-D images")
    Path(path).write_bytes(struct.pack(">I", magic) + struct.pack(f">{a.ndim}I", *a.shape) + a.tobytes())


def load_idx(path, limit: int | None = None) -> Dataset:
    """IDX images scaled to [0, 1] and binarized at 0.5, or labels as discrete states."""
    a = read_idx(path)
    if limit is not None:
        a = a[:limit]
    if a.ndim == 1:
        return Dataset(a.astype(np.int64), Path(path).name, str(path))
    bits = (a.reshape(a.shape[0], -1) / 255.0 > 0.5).astype(np.uint8)
    return Dataset(bits, Path(path).name, str(path))


# -- generators ---------------------------------------------------------------

def default_target() -> ProbVector:
    return ProbVector(np.array(DEFAULT_TARGET))


def gen_discrete(p, n: int, seed: int) -> Dataset:
    """``n`` i.i.d. categorical draws (one uniform each)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = p if isinstance(p, ProbVector) else ProbVector(p)
    u = RngStream(seed, 0).uniforms(n)
    xs = categorical_index(np.cumsum(p.probs), u).astype(np.int64)
    return Dataset(xs, "discrete", f"gen_discrete(K={p.K}, n={n}, seed={seed})")


def gen_mixture(components, n: int, seed: int) -> Dataset:
    """Isotropic Gaussian mixture; ``components`` is a list of ``(weight, mean, std)``.

    Per draw: one uniform picks the component, ``2 d`` feed the Gaussian.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    weights = ProbVector([w for w, _, _ in components])
    means = np.array([np.asarray(mu, dtype=np.float64) for _, mu, _ in components])
    stds = np.array([float(s) for _, _, s in components])
    if np.any(stds <= 0):
        raise ValueError("component std must be positive")
    d = means.shape[1]
    u = RngStream(seed, 0).uniforms(n * (1 + 2 * d)).reshape(n, 1 + 2 * d)
    k = categorical_index(np.cumsum(weights.probs), u[:, 0])
    z = box_muller(u[:, 1:].reshape(n, d, 2))
    return Dataset(means[k] + stds[k, None] * z, "mixture", f"gen_mixture(k={len(stds)}, d={d}, n={n}, seed={seed})")


def default_mixture(d: int = 10, k: int = 3, seed: int = 7, spread: float = 2.0, std: float = 0.5):
    """Well-separated ``k``-component mixture with means drawn uniformly in ``[-spread, spread]^d``."""
    u = RngStream(seed, 99).uniforms(k * d).reshape(k, d)
    return [(1.0 / k, spread * (2.0 * u[i] - 1.0), std) for i in range(k)]


# -- PGM ----------------------------------------------------------------------

def sample_grid(samples, rows: int, cols: int, side: int) -> np.ndarray:
    """Tile binary samples row-major; each tile is followed by a gray column and row."""
    samples = [np.asarray(s) for s in samples]
    if not samples:
        raise ValueError("no samples to draw")
    if rows * cols < len(samples):
        raise ValueError(f"{len(samples)} samples do not fit a {rows}x{cols} grid")
    for s in samples:
        if s.size != side * side:
            raise ValueError(f"sample of size {s.size} is not a {side}x{side} image")
    cell = side + 1
    img = np.full((rows * cell, cols * cell), SEPARATOR_GRAY, dtype=np.uint8)
    for k, s in enumerate(samples):
        r, c = divmod(k, cols)
        img[r * cell:r * cell + side, c * cell:c * cell + side] = np.where(s.reshape(side, side) > 0, 255, 0)
    return img


def write_pgm(path, img: np.ndarray) -> None:
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + np.asarray(img, dtype=np.uint8).tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5" or tokens[3] != b"255":
        raise FormatError(f"{path}: not a P5 PGM with maxval 255")
    w, h = int(tokens[1]), int(tokens[2])
    pix = raw[pos + 1:]
    if len(pix) != w * h:
        raise FormatError(f"{path}: expected {w * h} pixel bytes, got {len(pix)}")
    return np.frombuffer(pix, dtype=np.uint8).reshape(h, w)


def write_sample_grid(samples, rows: int, cols: int, side: int, path) -> None:
    write_pgm(path, sample_grid(samples, rows, cols, side))


def grid_tiles(img: np.ndarray, rows: int, cols: int, side: int, count: int) -> np.ndarray:
    """Recover the first ``count`` binary samples from a grid image."""
    cell = side + 1
    out = []
    for k in range(count):
        r, c = divmod(k, cols)
        out.append((img[r * cell:r * cell + side, c * cell:c * cell + side] > 127).astype(np.uint8).ravel())
    return np.array(out)


# -- CSV ----------------------------------------------------------------------

def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) if not isinstance(v, str) else v for v in row])


def _read_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from None
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def write_dataset_csv(ds: Dataset, path) -> None:
    s = ds.samples
    if s.ndim == 1:
        _write_csv(path, ["x"], ([int(v)] for v in s))
    else:
        prefix = "b" if ds.kind is SampleKind.BINARY else "x"
        _write_csv(path, [f"{prefix}{j}" for j in range(s.shape[1])], (list(r) for r in s))


def load_dataset(path, limit: int | None = None) -> Dataset:
    """CSV dataset or IDX file, chosen by extension (``.csv`` vs anything else)."""
    if str(path).endswith(".csv"):
        ds = read_dataset_csv(path)
        return ds if limit is None else Dataset(ds.samples[:limit], ds.name, ds.source)
    return load_idx(path, limit)


def read_dataset_csv(path) -> Dataset:
    """Header ``x`` (discrete), ``b0..`` (binary) or ``x0..`` (real)."""
    header, rows = _read_csv(path)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    try:
        if header == ["x"]:
            return Dataset(np.array([int(r[0]) for r in rows], dtype=np.int64), Path(path).name, str(path))
        arr = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if arr.shape[1] != len(header):
        raise FormatError(f"{path}: rows have {arr.shape[1]} fields, header has {len(header)}")
    if header[0].startswith("b"):
        return Dataset(arr.astype(np.uint8), Path(path).name, str(path))
    return Dataset(arr, Path(path).name, str(path))


def write_chain_csv(run: ChainRun, path) -> None:
    """Retained step index, then x_t, then x_tilde_t.

    Headers: ``t,x,xt`` (discrete), ``t,b0..,bt0..`` (binary) or
    ``t,x0..,xt0..`` (real).
    """
    xs, xts = run.xs, run.x_tildes
    if xs.ndim == 1:
        _write_csv(path, ["t", "x", "xt"], zip(run.steps, xs, xts))
        return
    d = xs.shape[1]
    p = "b" if xs.dtype == np.uint8 else "x"
    header = ["t"] + [f"{p}{j}" for j in range(d)] + [f"{p}t{j}" for j in range(d)]
    _write_csv(path, header, ([t, *a, *b] for t, a, b in zip(run.steps, xs, xts)))


def read_chain_csv(path) -> ChainRun:
    header, rows = _read_csv(path)
    if not rows or header[0] != "t" or len(header) < 3:
        raise FormatError(f"{path}: not a chain CSV")
    try:
        if header == ["t", "x", "xt"]:
            a = np.array(rows, dtype=np.int64)
            return ChainRun(a[:, 1], a[:, 2], a[:, 0])
        a = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if a.shape[1] != len(header) or len(header) % 2 == 0:
        raise FormatError(f"{path}: malformed chain columns")
    d = (len(header) - 1) // 2
    xs, xts = a[:, 1:1 + d], a[:, 1 + d:]
    if header[1] == "b0":
        xs, xts = xs.astype(np.uint8), xts.astype(np.uint8)
    return ChainRun(xs, xts, a[:, 0].astype(np.int64))


def write_metrics_csv(metrics, path) -> None:
    _write_csv(path, ["epoch", "train_nll", "valid_nll", "seconds"], metrics.rows())


def read_metrics_csv(path):
    header, rows = _read_csv(path)
    if header != ["epoch", "train_nll", "valid_nll", "seconds"]:
        raise FormatError(f"{path}: not a metrics CSV")
    return [(int(r[0]), float(r[1]), float(r[2]), float(r[3])) for r in rows]


def write_report_csv(rows, path) -> None:
    """Rows of ``(metric, value, n_samples, seed)``."""
    _write_csv(path, ["metric", "value", "n_samples", "seed"], rows)


def read_report_csv(path):
    header, rows = _read_csv(path)
    if header != ["metric", "value", "n_samples", "seed"]:
        raise FormatError(f"{path}: not a report CSV")
    return [(r[0], float(r[1]), int(r[2]), int(r[3])) for r in rows]


def write_distribution_csv(p, path) -> None:
    _write_csv(path, ["state", "prob"], enumerate(np.asarray(p)))


def read_distribution_csv(path) -> ProbVector:
    header, rows = _read_csv(path)
    if header != ["state", "prob"]:
        raise FormatError(f"{path}: not a distribution CSV")
    return ProbVector([float(r[1]) for r in rows])


def write_ergodicity_csv(report, path) -> None:
    """One row per violation: ``kind,row,col``."""
    _write_csv(path, ["kind", "row", "col"], report.rows())
