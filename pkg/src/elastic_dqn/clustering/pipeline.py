"""The similarity oracle: sample the bank, standardize, cap dimensionality,
fit the clusterer, and label the two query states.

The two queries are appended to the sampled dataset before fitting so both
get labels from the very fit that saw them; two extra rows cannot form a
cluster on their own at min_cluster_size >= 3. Outliers come back as
per-query sentinel labels so two outliers never compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolationError
from ..memory import StateBank
from .hdbscan import ClusterModel, fit_hdbscan
from .preprocess import PcaBasis, Standardizer, fit_pca, fit_standardizer

OUTLIER_QUERY_A = -2
OUTLIER_QUERY_B = -3


def labels_equal(label_a: int, label_b: int) -> bool:
    """Same non-outlier cluster id; any outlier involvement means dissimilar."""
    return label_a >= 0 and label_a == label_b


@dataclass
class PipelineFit:
    sample_indices: np.ndarray  # bank slots the sample came from
    labels: np.ndarray  # length u + 2; last two rows are the queries
    model: ClusterModel
    standardizer: Standardizer
    basis: PcaBasis | None
    fit_index: int


class ClusterPipeline:
    """Owns the per-step refit cadence. With refit_interval == 1 (the default
    and the evaluated setting) every call fits from scratch; larger intervals
    reuse the previous fit and assign queries by nearest fitted point, an
    approximation kept behind the knob."""

    def __init__(
        self,
        sample_size: int,
        min_cluster_size: int = 5,
        min_samples: int = 5,
        max_pca_components: int = 30,
        refit_interval: int = 1,
    ) -> None:
        if sample_size < 2:
            raise ContractViolationError(f"sample_size must be >= 2, got {sample_size}")
        if refit_interval < 1:
            raise ContractViolationError(f"refit_interval must be >= 1, got {refit_interval}")
        self.sample_size = sample_size
        self.min_cluster_size = min_cluster_size
        self.min_samples = min_samples
        self.max_pca_components = max_pca_components
        self.refit_interval = refit_interval
        self._calls = 0
        self._fits = 0
        self._cached: PipelineFit | None = None

    @property
    def fit_count(self) -> int:
        return self._fits

    def label_pair(
        self,
        bank: StateBank,
        query_a: np.ndarray,
        query_b: np.ndarray,
        rng: np.random.Generator,
    ) -> tuple[int, int, PipelineFit | None]:
        """Label (query_a, query_b); returns the fit when one was performed
        this call (None on cached calls)."""
        query_a = np.asarray(query_a, dtype=np.float64)
        query_b = np.asarray(query_b, dtype=np.float64)
        refit = self._cached is None or self._calls % self.refit_interval == 0
        self._calls += 1
        if refit:
            fit = self._fit(bank, query_a, query_b, rng)
            self._cached = fit
            la, lb = int(fit.labels[-2]), int(fit.labels[-1])
        else:
            fit = None
            la, lb = self._assign_cached(query_a, query_b)
        if la < 0:
            la = OUTLIER_QUERY_A
        if lb < 0:
            lb = OUTLIER_QUERY_B
        return la, lb, fit

    def _fit(
        self,
        bank: StateBank,
        query_a: np.ndarray,
        query_b: np.ndarray,
        rng: np.random.Generator,
    ) -> PipelineFit:
        idx = bank.sample_indices(self.sample_size, rng)
        dataset = np.vstack([bank.features_at(idx), query_a[None, :], query_b[None, :]])
        standardizer = fit_standardizer(dataset)
        transformed = standardizer.transform(dataset)
        basis = fit_pca(transformed, self.max_pca_components)
        if basis is not None:
            transformed = basis.transform(transformed)
        model = fit_hdbscan(transformed, self.min_cluster_size, self.min_samples)
        fit = PipelineFit(
            sample_indices=idx,
            labels=model.labels,
            model=model,
            standardizer=standardizer,
            basis=basis,
            fit_index=self._fits,
        )
        self._fits += 1
        return fit

    def _assign_cached(self, query_a: np.ndarray, query_b: np.ndarray) -> tuple[int, int]:
        fit = self._cached
        queries = np.vstack([query_a, query_b])
        transformed = fit.standardizer.transform(queries)
        if fit.basis is not None:
            transformed = fit.basis.transform(transformed)
        out = []
        for q in transformed:
            d = np.sqrt(((fit.model.data - q) ** 2).sum(axis=1))
            j = int(np.argmin(d))
            if d[j] <= fit.model.core_distances[j]:
                out.append(int(fit.model.labels[j]))
            else:
                out.append(-1)
        return out[0], out[1]


def dump_fit_csv(features: np.ndarray, labels: np.ndarray, path: str) -> None:
    """Debug dump of one fit's (feature row, label) pairs."""
    features = np.atleast_2d(features)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        cols = [f"feature_{i}" for i in range(features.shape[1])]
        fh.write(",".join(cols + ["label"]) + "\n")
        for row, label in zip(features, labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{int(label)}\n")
