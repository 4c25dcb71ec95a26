"""Functional depth of sample columns by iterated farthest-pair extraction.

Column-sorted samples are treated as non-decreasing curves under the
Euclidean (L2) distance.  The farthest pair of curves forms the outermost
border; removing it and repeating peels the sample inward, and a column's
depth is the index of the border it lands in divided by the sample size.
The members of the innermost border are the deepest curves and serve as
the normalization reference.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .core import DimensionError, DomainError, ExpressionMatrix


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric n x n matrix of inter-column distances."""

    d: np.ndarray
    metric_tag: str = "L2"

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DimensionError(f"distance matrix must be square, got {d.shape}")
        if not np.isfinite(d).all():
            raise DomainError("non-finite distance")
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class Border:
    """One extracted border: a farthest pair, or a final odd singleton."""

    members: tuple[int, ...]
    distance: float


@dataclass(frozen=True)
class BorderSequence:
    """All borders in extraction order; they partition the column indices."""

    borders: tuple[Border, ...]
    n: int

    def distances(self) -> np.ndarray:
        return np.array([b.distance for b in self.borders])

    @property
    def deepest_members(self) -> tuple[int, ...]:
        return self.borders[-1].members


@dataclass(frozen=True, eq=False)
class DepthResult:
    """Per-column depth: border index / n, with the deepest columns marked."""

    depth_values: np.ndarray
    border_index: np.ndarray
    deepest: tuple[int, ...]


def pairwise_distances(m: ExpressionMatrix) -> DistanceMatrix:
    """Euclidean distance between every pair of columns."""
    xt = np.ascontiguousarray(m.values.T)
    return DistanceMatrix(_kernels.pairwise_dists(xt))


def extract_borders(dm: DistanceMatrix) -> BorderSequence:
    """Peel farthest pairs off the sample until at most one column is left.

    Each round removes the pair with the largest distance among the
    remaining columns (ties broken toward the lexicographically smallest
    index pair); with an odd sample the final column forms a singleton
    border at distance 0.  One sort of all pairs followed by a sweep gives
    the same sequence as rescanning every round.
    """
    n = dm.n
    if n < 2:
        raise DimensionError("need at least 2 columns to extract borders")
    iu, ju = np.triu_indices(n, 1)
    dist = dm.d[iu, ju]
    # descending distance, then ascending (i, j)
    order = np.lexsort((ju, iu, -dist))
    used = np.zeros(n, dtype=bool)
    borders = []
    for k in order:
        i, j = int(iu[k]), int(ju[k])
        if used[i] or used[j]:
            continue
        used[i] = used[j] = True
        borders.append(Border((i, j), float(dist[k])))
    leftover = np.flatnonzero(~used)
    if leftover.size:
        borders.append(Border((int(leftover[0]),), 0.0))
    return BorderSequence(tuple(borders), n)


def depth_values(bs: BorderSequence) -> DepthResult:
    """Depth of each column: its border's 1-based index divided by n."""
    border_index = np.zeros(bs.n, dtype=np.intp)
    for k, border in enumerate(bs.borders, start=1):
        for j in border.members:
            border_index[j] = k
    return DepthResult(border_index / bs.n, border_index, bs.deepest_members)


def deepest_curve(m: ExpressionMatrix, borders: Optional[BorderSequence] = None):
    """Reference curve from the deepest border of the sample.

    Intended for column-sorted matrices (the depth is defined on the
    sorted curves).  A singleton deepest border returns that column; a
    two-member border returns the component-wise average of the pair,
    which is still non-decreasing.
    """
    from .normalize import ReferenceCurve

    if borders is None:
        borders = extract_borders(pairwise_distances(m))
    members = borders.deepest_members
    if len(members) == 1:
        return ReferenceCurve(m.values[:, members[0]], source_tag="deepest")
    pair = m.values[:, list(members)]
    return ReferenceCurve(pair.mean(axis=1), source_tag="deepest_pair_average")


def depth_records(m: ExpressionMatrix, bs: BorderSequence, dr: Optional[DepthResult] = None):
    """Rows for the depth CSV export, one per sample column."""
    if dr is None:
        dr = depth_values(bs)
    partner = {}
    for border in bs.borders:
        if len(border.members) == 2:
            a, b = border.members
            partner[a], partner[b] = b, a
    rows = []
    for j in range(bs.n):
        k = int(dr.border_index[j])
        rows.append(
            {
                "sample_id": m.sample_ids[j],
                "border_index": k,
                "depth": f"{k}/{bs.n}",
                "intra_pair_distance": float(bs.borders[k - 1].distance),
                "pair_partner_id": m.sample_ids[partner[j]] if j in partner else "",
            }
        )
    return rows


def save_depth_csv(m: ExpressionMatrix, bs: BorderSequence, path) -> None:
    rows = depth_records(m, bs)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(
            fh,
            fieldnames=["sample_id", "border_index", "depth", "intra_pair_distance", "pair_partner_id"],
        )
        w.writeheader()
        for r in rows:
            r = dict(r)
            r["intra_pair_distance"] = repr(r["intra_pair_distance"])
            w.writerow(r)
