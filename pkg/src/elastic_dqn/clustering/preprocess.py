"""Feature standardization and the 30-component PCA cap."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolationError


@dataclass
class Standardizer:
    """Per-feature (x - mean) / std; exactly constant features map to 0."""

    means: np.ndarray
    std_devs: np.ndarray

    def transform(self, data: np.ndarray) -> np.ndarray:
        data = np.asarray(data, dtype=np.float64)
        if data.shape[-1] != self.means.shape[0]:
            raise ContractViolationError(
                f"feature dim {data.shape[-1]} != fitted dim {self.means.shape[0]}"
            )
        scale = np.zeros_like(self.std_devs)
        active = self.std_devs > 0.0
        scale[active] = 1.0 / self.std_devs[active]
        return (data - self.means) * scale


def fit_standardizer(data: np.ndarray) -> Standardizer:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ContractViolationError("need a 2-D dataset with at least 2 rows")
    # Exact-equality constancy check: dead ReLU units give bitwise-identical
    # columns, and near-constant float columns must not blow up the scale.
    constant = np.all(data == data[0], axis=0)
    means = data.mean(axis=0)
    stds = data.std(axis=0)
    stds[constant] = 0.0
    return Standardizer(means=means, std_devs=stds)


@dataclass
class PcaBasis:
    """Top principal directions of (already standardized) data, rows orthonormal,
    explained variance descending."""

    components: np.ndarray
    explained_variance: np.ndarray

    def transform(self, data: np.ndarray) -> np.ndarray:
        return np.asarray(data, dtype=np.float64) @ self.components.T


def fit_pca(data: np.ndarray, max_components: int = 30) -> PcaBasis | None:
    """Identity pass-through (None) when the data has <= max_components
    features; otherwise the top components by explained variance, via SVD of
    the centered data."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ContractViolationError("need a 2-D dataset with at least 2 rows")
    if data.shape[1] <= max_components:
        return None
    centered = data - data.mean(axis=0)
    if centered.shape[0] > centered.shape[1]:
        # Same singular values / right vectors as the full matrix, much cheaper
        # than a tall SVD (this runs on every refit).
        reduced = np.linalg.qr(centered, mode="r")
    else:
        reduced = centered
    _, s, vt = np.linalg.svd(reduced, full_matrices=False)
    take = min(max_components, vt.shape[0])
    return PcaBasis(
        components=vt[:take].copy(),
        explained_variance=(s[:take] ** 2) / data.shape[0],
    )
