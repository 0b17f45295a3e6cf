"""Logistic-map regression data: generation, splitting, noise and CSV I/O.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``. Seeds may
be an int or a tuple of ints (fed to ``SeedSequence``) so that callers can
derive independent, reproducible streams, e.g. ``(master_seed, round)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, (tuple, list)):
        seed = np.random.SeedSequence([int(s) for s in seed])
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Sample:
    sequence: np.ndarray
    target: float


@dataclass(frozen=True)
class DatasetMeta:
    r_min: float
    r_max: float
    count: int
    x1: float
    length: int


@dataclass(frozen=True, eq=False)
class Dataset:
    sequences: np.ndarray  # (count, length)
    targets: np.ndarray  # (count,)
    meta: DatasetMeta

    def __len__(self) -> int:
        return len(self.targets)

    @property
    def samples(self) -> list[Sample]:
        return list(iter(self))

    def __iter__(self) -> Iterator[Sample]:
        for seq, r in zip(self.sequences, self.targets):
            yield Sample(seq, float(r))

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(
            self.sequences[index].copy(),
            self.targets[index].copy(),
            replace(self.meta, count=len(index)),
        )


def logistic_sequence(r: float, x1: float, length: int) -> np.ndarray:
    """Iterates of x_t = r x_{t-1} (1 - x_{t-1}), starting with x1 itself."""
    if length < 1:
        raise ValueError("length must be >= 1")
    out = np.empty(length)
    out[0] = x1
    for t in range(1, length):
        out[t] = r * out[t - 1] * (1 - out[t - 1])
    return out


def generate_dataset(
    count: int = 1000,
    r_min: float = 3.5,
    r_max: float = 4.0,
    x1: float = 0.5,
    length: int = 12,
) -> Dataset:
    if count < 2:
        raise ValueError("count must be >= 2")
    k = np.arange(count)
    targets = r_min + k * (r_max - r_min) / (count - 1)
    seqs = np.array([logistic_sequence(r, x1, length) for r in targets])
    return Dataset(seqs, targets, DatasetMeta(r_min, r_max, count, x1, length))


def split(dataset: Dataset, train_count: int, seed) -> tuple[Dataset, Dataset]:
    """Random partition into train/test; each part keeps the original order."""
    n = len(dataset)
    if not 0 < train_count < n:
        raise ValueError(f"train_count must be in (0, {n}), got {train_count}")
    perm = make_rng(seed).permutation(n)
    train_idx = np.sort(perm[:train_count])
    test_idx = np.sort(perm[train_count:])
    return dataset.subset(train_idx), dataset.subset(test_idx)


def perturbation_noise(shape, epsilon: float, seed) -> np.ndarray:
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if epsilon == 0:
        return np.zeros(shape)
    return make_rng(seed).uniform(-epsilon, epsilon, shape)


def perturb(data, epsilon: float, seed):
    """Add i.i.d. U[-eps, eps] noise to every sequence entry; no clipping.

    Accepts a :class:`Dataset` (returns a Dataset) or a sequence of
    :class:`Sample` (returns a list of Samples).
    """
    if isinstance(data, Dataset):
        noise = perturbation_noise(data.sequences.shape, epsilon, seed)
        return Dataset(data.sequences + noise, data.targets.copy(), data.meta)
    samples = list(data)
    if not samples:
        return []
    seqs = np.array([s.sequence for s in samples], dtype=float)
    seqs = seqs + perturbation_noise(seqs.shape, epsilon, seed)
    return [Sample(seq, s.target) for seq, s in zip(seqs, samples)]


def bifurcation_table(r_values: Sequence[float], iterations: int = 50, x1: float = 0.5):
    """Rows (r, t, x_t) with t = 1..iterations for each r."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rows = []
    for r in r_values:
        seq = logistic_sequence(float(r), x1, iterations)
        rows.extend((float(r), t + 1, float(v)) for t, v in enumerate(seq))
    return rows


def write_dataset_csv(path, dataset: Dataset) -> None:
    length = dataset.sequences.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x_{i + 1}" for i in range(length)] + ["r"])
        for seq, r in zip(dataset.sequences, dataset.targets):
            w.writerow([repr(float(v)) for v in seq] + [repr(float(r))])


def read_dataset_csv(path, x1: float | None = None) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "r" or not all(h.startswith("x_") for h in header[:-1]):
            raise ValueError(f"{path}: expected header x_1..x_l,r")
        rows = [[float(v) for v in row] for row in reader if row]
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    seqs, targets = arr[:, :-1], arr[:, -1]
    meta = DatasetMeta(
        float(targets.min()) if len(targets) else 0.0,
        float(targets.max()) if len(targets) else 0.0,
        len(targets),
        float(seqs[0, 0]) if x1 is None and len(targets) else (x1 or 0.0),
        seqs.shape[1],
    )
    return Dataset(seqs, targets, meta)


def write_bifurcation_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "t", "x_t"])
        for r, t, v in rows:
            w.writerow([repr(r), t, repr(v)])
