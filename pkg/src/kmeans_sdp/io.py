"""Dataset CSV reading and writing.

Format: one point per row, m numeric columns, optional final integer column
named ``label``. A header row is optional and detected by a non-numeric first
row. Headerless files are treated as coordinates only unless ``has_labels``
says otherwise.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import DimensionMismatch
from .geometry import Dataset


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def load_dataset_csv(path, has_labels: bool | None = None) -> Dataset:
    """Read a dataset from CSV.

    Args:
        path: file to read.
        has_labels: force label-column handling for headerless files; with a
            header the decision is made by the last column being ``label``.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(field.strip() for field in row)]
    if not rows:
        raise DimensionMismatch(f"{path}: empty dataset file")
    header = None
    if not all(_is_number(tok) for tok in rows[0]):
        header = [tok.strip() for tok in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DimensionMismatch(f"{path}: header but no data rows")
    if header is not None:
        labeled = header[-1].lower() == "label"
    else:
        labeled = bool(has_labels)
    values = np.array([[float(tok) for tok in row] for row in rows])
    if labeled:
        if values.shape[1] < 2:
            raise DimensionMismatch(f"{path}: label column requires at least one coordinate column")
        labels = values[:, -1]
        if not np.allclose(labels, np.round(labels)):
            raise DimensionMismatch(f"{path}: label column contains non-integers")
        return Dataset(points=values[:, :-1], truth_labels=labels.astype(int))
    return Dataset(points=values)


def save_dataset_csv(path, data: Dataset, header: bool = True) -> None:
    """Write a dataset to CSV, appending the label column when present."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        m = data.dim
        labeled = data.truth_labels is not None
        if header:
            names = [f"x{j}" for j in range(m)]
            if labeled:
                names.append("label")
            writer.writerow(names)
        for i in range(data.n_points):
            row = [repr(float(v)) for v in data.points[i]]
            if labeled:
                row.append(str(int(data.truth_labels[i])))
            writer.writerow(row)
