"""Residual-sweep engine for greedy covariate inclusion.

The engine keeps the running least-squares residual and a copy of all
candidate columns orthogonalized against the covariates included so far.
One sweep scores every candidate through the rank-one projection formula

    ss_new = ss0 - (r'z)^2 / ||z||^2

with z the orthogonalized candidate, so a full scan is two BLAS products.
Inclusion is one modified Gram-Schmidt pass over the remaining columns.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "COLLINEARITY_TOL",
    "Dataset",
    "ExhaustedError",
    "RankDeficiencyError",
    "SweepState",
    "make_dataset",
    "standardize",
    "svd_precondition",
]

# Candidate dropped once its orthogonalized squared norm falls below this
# multiple of n; prevents division blow-up in the rank-one update.
COLLINEARITY_TOL = 1e-10

# Fixed block width for the candidate scan.  Blocks are cut identically no
# matter how many workers run them, so results are bit-identical for any
# worker count.
_SCAN_BLOCK = 4096


class ExhaustedError(RuntimeError):
    """Raised by the sweep when every candidate has been included or dropped."""


class RankDeficiencyError(ValueError):
    """Preconditioning found fewer numerically nonzero singular values than expected."""

    def __init__(self, rank: int, expected: int):
        super().__init__(f"matrix has numerical rank {rank}, expected {expected}")
        self.rank = rank
        self.expected = expected


@dataclass(frozen=True)
class Dataset:
    """Response vector plus covariate matrix with standardization metadata.

    ``X`` is stored in column-major order; ``column_norms`` holds the L2
    norm of each stored column.  ``excluded`` lists zero columns that
    cannot be standardized and must never be selected.
    """

    y: np.ndarray
    X: np.ndarray
    column_norms: np.ndarray
    standardized: bool
    names: tuple[str, ...] | None = None
    excluded: tuple[int, ...] = ()

    def __post_init__(self):
        n, q = self.X.shape
        if n < 3:
            raise ValueError(f"need at least 3 observations, got {n}")
        if q < 1:
            raise ValueError("need at least one covariate column")
        if self.y.shape != (n,):
            raise ValueError(f"response length {self.y.shape} does not match n={n}")
        if not np.all(np.isfinite(self.y)) or not np.all(np.isfinite(self.X)):
            raise ValueError("dataset contains non-finite entries")
        if self.names is not None and len(self.names) != q:
            raise ValueError("one name per column required")
        if self.standardized:
            keep = np.ones(q, dtype=bool)
            keep[list(self.excluded)] = False
            sq = self.column_norms[keep] ** 2
            if sq.size and np.max(np.abs(sq - n)) > 1e-8 * n:
                raise ValueError("standardized dataset must have column squared norms equal to n")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def q(self) -> int:
        return self.X.shape[1]

    def subset(self, columns) -> "Dataset":
        """Dataset restricted to the given columns (order preserved)."""
        columns = np.asarray(columns, dtype=int)
        names = tuple(self.names[c] for c in columns) if self.names is not None else None
        old_excluded = set(self.excluded)
        excluded = tuple(i for i, c in enumerate(columns) if int(c) in old_excluded)
        return Dataset(
            y=self.y,
            X=np.asfortranarray(self.X[:, columns]),
            column_norms=self.column_norms[columns].copy(),
            standardized=self.standardized,
            names=names,
            excluded=excluded,
        )


def make_dataset(y, X, names=None) -> Dataset:
    """Validate raw arrays and wrap them in an (unstandardized) Dataset."""
    y = np.ascontiguousarray(y, dtype=float)
    X = np.asfortranarray(X, dtype=float)
    norms = np.sqrt(np.einsum("ij,ij->j", X, X))
    return Dataset(y=y, X=X, column_norms=norms, standardized=False,
                   names=tuple(names) if names is not None else None)


def standardize(d: Dataset) -> Dataset:
    """Rescale every column to squared norm n.

    Scaling only, no centering.  Zero columns cannot be rescaled; they are
    flagged in ``excluded`` and left untouched.  Raises if no column
    survives.
    """
    n = d.n
    sq = np.einsum("ij,ij->j", d.X, d.X)
    zero = sq <= n * 1e-30
    if np.all(zero):
        raise ValueError("all covariate columns are zero; nothing to standardize")
    scale = np.ones(d.q)
    scale[~zero] = np.sqrt(n / sq[~zero])
    X = np.asfortranarray(d.X * scale)
    norms = np.sqrt(np.einsum("ij,ij->j", X, X))
    excluded = tuple(sorted(set(d.excluded) | set(np.nonzero(zero)[0].tolist())))
    return Dataset(y=d.y, X=X, column_norms=norms, standardized=True,
                   names=d.names, excluded=excluded)


def svd_precondition(d: Dataset) -> Dataset:
    """Replace (y, X) by (Fy, FX) with F = u d^-1 u' from the SVD X = u d v'.

    When q >= n and X has full row rank this whitens the rows:
    (FX)(FX)' = I.  Computed through the n-by-n Gram matrix when q > n so
    no q-by-q object is ever formed.  Column identity is preserved, so
    selected indices refer to the original columns.

    For q < n the u d^-1 u' form would silently project y onto the column
    span; the component of y orthogonal to it is passed through unchanged
    instead (F += I - u u'), which makes the preconditioner the exact
    identity on an orthonormal design and changes nothing when q >= n.
    """
    X = d.X
    n, q = X.shape
    if q > n:
        gram = X @ X.T
        w, u = np.linalg.eigh(gram)
        order = np.argsort(w)[::-1]
        w = w[order]
        u = u[:, order]
        s = np.sqrt(np.clip(w, 0.0, None))
    else:
        u, s, _ = np.linalg.svd(X, full_matrices=False)
    expected = min(n, q)
    rank = int(np.sum(s > 1e-10 * s[0])) if s.size else 0
    if rank < expected:
        raise RankDeficiencyError(rank, expected)
    f = (u / s) @ u.T
    if q < n:
        f += np.eye(n) - u @ u.T
    return make_dataset(f @ d.y, f @ X, names=d.names)


@dataclass
class SweepState:
    """Mutable state of the greedy sweep.

    ``ss0`` is the total squared residual (the p-values only ever use the
    ratio ss01/ss0, so the total/mean convention is internal).  Candidate
    columns live in a full-width working matrix; included and dropped
    columns are masked out rather than compacted, which keeps every scan
    an identical full-matrix BLAS call.
    """

    dataset: Dataset
    residual: np.ndarray = field(init=False)
    ss0: float = field(init=False)
    active: list[int] = field(init=False)
    excluded: dict[int, str] = field(init=False)

    def __post_init__(self):
        d = self.dataset
        self.residual = d.y.astype(float).copy()
        self.ss0 = float(self.residual @ self.residual)
        self.active = []
        self.excluded = {}
        self._Z = np.array(d.X, dtype=float, order="F", copy=True)
        self._sqnorms = np.einsum("ij,ij->j", self._Z, self._Z)
        self._alive = np.ones(d.q, dtype=bool)
        for i in d.excluded:
            self._alive[i] = False
            self.excluded[i] = "zero column"
        self._drop_small()

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def q(self) -> int:
        return self.dataset.q

    @property
    def candidate_count(self) -> int:
        return int(np.sum(self._alive))

    @property
    def candidate_columns(self) -> np.ndarray:
        """Orthogonalized candidate columns (copy), in original column order."""
        return self._Z[:, self._alive].copy()

    def candidate_indices(self) -> np.ndarray:
        return np.nonzero(self._alive)[0]

    def _drop_small(self) -> None:
        small = self._alive & (self._sqnorms < COLLINEARITY_TOL * self.n)
        for i in np.nonzero(small)[0]:
            self._alive[i] = False
            self.excluded[int(i)] = "collinear with active set"

    def _score_block(self, start: int, stop: int) -> np.ndarray:
        z = self._Z[:, start:stop]
        num = self.residual @ z
        return num * num

    def sweep_best(self, workers: int = 1) -> tuple[int, float]:
        """Return (index, ss01) for the candidate giving the largest drop.

        Ties are broken toward the smallest column index.  The scan is cut
        into fixed-width blocks processed either serially or by a thread
        pool; the block boundaries do not depend on ``workers``, so the
        result is bit-identical for any worker count.
        """
        if not self._alive.any():
            raise ExhaustedError("no live candidate columns remain")
        q = self.q
        bounds = [(s, min(s + _SCAN_BLOCK, q)) for s in range(0, q, _SCAN_BLOCK)]
        if workers > 1 and len(bounds) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                nums = list(pool.map(lambda se: self._score_block(*se), bounds))
        else:
            nums = [self._score_block(s, e) for s, e in bounds]

        best_idx = -1
        best_ss = np.inf
        for (s, e), num2 in zip(bounds, nums):
            ssv = self.ss0 - num2 / np.where(self._sqnorms[s:e] > 0.0, self._sqnorms[s:e], np.inf)
            ssv = np.where(self._alive[s:e], ssv, np.inf)
            j = int(np.argmin(ssv))
            if ssv[j] < best_ss:
                best_ss = float(ssv[j])
                best_idx = s + j
        if best_idx < 0 or not np.isfinite(best_ss):
            raise ExhaustedError("no live candidate columns remain")
        return best_idx, max(best_ss, 0.0)

    def include(self, index: int) -> None:
        """Move one candidate into the active set.

        Updates the residual by the rank-one projection, orthogonalizes the
        remaining candidates against the included column, and drops any
        candidate whose leftover squared norm falls below the collinearity
        tolerance.  Squared norms are recomputed exactly after the update
        (one extra pass) so the drop decision never rests on a downdated
        value.
        """
        index = int(index)
        if not self._alive[index]:
            raise ValueError(f"column {index} is not a live candidate")
        if len(self.active) >= self.n - 2:
            raise ValueError("active set may not exceed n - 2 covariates")
        sqn = self._sqnorms[index]
        z = self._Z[:, index].copy()
        proj = float(self.residual @ z)
        self.residual -= z * (proj / sqn)
        self.ss0 = max(self.ss0 - proj * proj / sqn, 0.0)

        u = z / np.sqrt(sqn)
        coef = u @ self._Z
        self._Z -= u[:, None] * coef[None, :]
        self.active.append(index)
        self._alive[index] = False
        self._sqnorms = np.einsum("ij,ij->j", self._Z, self._Z)
        self._drop_small()
