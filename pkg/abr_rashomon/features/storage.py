"""On-disk form of a BinDataset: binarizer JSON, packed bit matrix and labels CSV."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from abr_rashomon.features.binarize import Binarizer, BinDataset

BINARIZER_FILENAME = "binarizer.json"
MATRIX_FILENAME = "matrix.npz"
LABELS_FILENAME = "labels.csv"


def save_bin_dataset(data: BinDataset, directory: str | Path) -> list[Path]:
    """Write `data` into `directory` and return the files written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    binarizer_path = directory / BINARIZER_FILENAME
    data.binarizer.save(binarizer_path)

    matrix_path = directory / MATRIX_FILENAME
    with open(matrix_path, "wb") as f:
        np.savez(f, packed=np.packbits(data.matrix, axis=1), shape=np.asarray(data.matrix.shape, dtype=np.int64))

    labels_path = directory / LABELS_FILENAME
    with open(labels_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["label"])
        writer.writerows([int(label)] for label in data.labels)

    return [binarizer_path, matrix_path, labels_path]


def load_bin_dataset(directory: str | Path) -> BinDataset:
    """Read a dataset written by `save_bin_dataset`."""
    directory = Path(directory)
    binarizer = Binarizer.load(directory / BINARIZER_FILENAME)

    with np.load(directory / MATRIX_FILENAME) as archive:
        rows, columns = (int(value) for value in archive["shape"])
        matrix = np.unpackbits(archive["packed"], axis=1, count=columns).astype(bool).reshape(rows, columns)

    with open(directory / LABELS_FILENAME, encoding="utf-8", newline="") as f:
        labels = np.array([int(record["label"]) for record in csv.DictReader(f)], dtype=np.int64)

    return BinDataset(matrix=matrix, labels=labels, binarizer=binarizer)
