"""Encoded dataset container shared by the pipeline and the model engine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LabeledData:
    """Feature matrix plus integer class labels.

    ``X`` has one row per sample; ``y`` holds class indices aligned with it.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.X.ndim != 2:
            raise ValueError("X must be 2-D")
        if self.y.shape != (self.X.shape[0],):
            raise ValueError("y must have one entry per row of X")

    def __len__(self) -> int:
        return self.X.shape[0]

    @staticmethod
    def concat(parts: list["LabeledData"]) -> "LabeledData":
        parts = [p for p in parts if len(p) > 0]
        if not parts:
            raise ValueError("nothing to concatenate")
        return LabeledData(
            np.concatenate([p.X for p in parts], axis=0),
            np.concatenate([p.y for p in parts], axis=0),
        )
