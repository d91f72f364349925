"""Tabular feature data: numeric attributes, class label, optional progress index."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

RESERVED = ("class", "progress")


@dataclass(frozen=True, eq=False)
class DataSet:
    """Ordered rows of named numeric attributes.

    ``values`` has shape ``(n_rows, n_attributes)``. ``labels`` holds one
    class token per row and ``progress`` one positive integer per row; either
    may be ``None``.
    """

    attribute_names: tuple
    values: np.ndarray
    labels: tuple | None = None
    progress: np.ndarray | None = None

    def __post_init__(self):
        names = tuple(str(n) for n in self.attribute_names)
        if len(set(names)) != len(names):
            raise DataError(f"attribute names must be unique: {names}")
        for r in RESERVED:
            if r in names:
                raise DataError(f"{r!r} is reserved and cannot be an attribute name")
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.size == 0:
            v = v.reshape(0, len(names))
        if v.ndim != 2 or v.shape[1] != len(names):
            raise DataError(f"values of shape {v.shape} do not match {len(names)} attributes")
        v.setflags(write=False)
        labels = None
        if self.labels is not None:
            labels = tuple(str(c) for c in self.labels)
            if len(labels) != v.shape[0]:
                raise DataError(f"{len(labels)} class labels for {v.shape[0]} rows")
        progress = None
        if self.progress is not None:
            progress = np.array(self.progress, dtype=np.int64, copy=True).reshape(-1)
            if progress.shape[0] != v.shape[0]:
                raise DataError(f"{progress.shape[0]} progress values for {v.shape[0]} rows")
            if np.any(progress < 1):
                raise DataError("progress values must be positive integers")
            progress.setflags(write=False)
        object.__setattr__(self, "attribute_names", names)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "progress", progress)

    def __len__(self):
        return self.values.shape[0]

    @property
    def class_values(self) -> tuple:
        """Distinct class labels in sorted order."""
        if self.labels is None:
            return ()
        return tuple(sorted(set(self.labels)))

    def column(self, name: str) -> np.ndarray:
        if name == "progress":
            if self.progress is None:
                raise DataError("dataset has no progress column")
            return self.progress.astype(np.float64)
        try:
            j = self.attribute_names.index(name)
        except ValueError:
            raise DataError(f"unknown attribute {name!r}") from None
        return self.values[:, j]

    def take(self, indices) -> "DataSet":
        idx = np.asarray(indices, dtype=np.int64)
        return DataSet(
            self.attribute_names,
            self.values[idx],
            None if self.labels is None else tuple(self.labels[i] for i in idx),
            None if self.progress is None else self.progress[idx],
        )

    def with_progress(self, progress) -> "DataSet":
        return DataSet(self.attribute_names, self.values, self.labels, progress)

    def with_labels(self, labels) -> "DataSet":
        return DataSet(self.attribute_names, self.values, labels, self.progress)

    def row(self, i: int) -> dict:
        """Attribute values of row ``i`` keyed by name (progress included)."""
        out = dict(zip(self.attribute_names, (float(x) for x in self.values[i])))
        if self.progress is not None:
            out["progress"] = float(self.progress[i])
        return out

    @staticmethod
    def concat(parts) -> "DataSet":
        parts = list(parts)
        if not parts:
            raise DataError("nothing to concatenate")
        names = parts[0].attribute_names
        for p in parts[1:]:
            if p.attribute_names != names:
                raise DataError("cannot concatenate datasets with different attributes")
        has_labels = {p.labels is not None for p in parts}
        has_progress = {p.progress is not None for p in parts}
        if len(has_labels) > 1 or len(has_progress) > 1:
            raise DataError("cannot mix datasets with and without class/progress columns")
        labels = sum((p.labels for p in parts), ()) if parts[0].labels is not None else None
        progress = np.concatenate([p.progress for p in parts]) if parts[0].progress is not None else None
        return DataSet(names, np.vstack([p.values for p in parts]), labels, progress)
