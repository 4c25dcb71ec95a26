"""Depth-ordered outlier screening with a Monte-Carlo-calibrated fence.

The classic one-dimensional fence flags x when x - y exceeds a multiple
of the interquartile range; here the pair (x, y) becomes a border pair of
curves, the gap becomes the intra-pair distance, and the interquartile
range is estimated by the median border distance.  The fence multiplier
is calibrated on multivariate-normal surrogates matched to the data's
size, dimension, and inter-sample covariance.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from . import _kernels
from .core import (
    ClassPartition,
    DataError,
    DegenerateScaleError,
    DimensionError,
    DomainError,
    ExpressionMatrix,
)
from .depth import Border, BorderSequence, DistanceMatrix, extract_borders


def robust_iqr(bs: BorderSequence) -> float:
    """Median intra-pair distance over all borders (odd singleton counts 0).

    On scalar columns this reproduces the classical fourth-spread
    (Tukey-hinge interquartile range) of the sample.
    """
    return float(np.median(bs.distances()))


@dataclass(frozen=True)
class TukeyCalibration:
    """Calibrated fence multiplier and the Monte-Carlo record behind it."""

    g_factor: float
    target_rate: float
    replicates: int
    seed: int
    per_replicate_quantiles: tuple[float, ...]

    def __post_init__(self):
        if not 0.0 < self.target_rate < 1.0:
            raise DomainError("target_rate must lie in (0, 1)")
        if self.replicates < 1:
            raise DomainError("need at least one replicate")
        med = float(np.median(np.asarray(self.per_replicate_quantiles)))
        if self.per_replicate_quantiles and med != self.g_factor:
            raise DomainError("g_factor must be the median of the replicate quantiles")

    def to_json(self) -> str:
        return json.dumps(
            {
                "g_factor": self.g_factor,
                "target_rate": self.target_rate,
                "replicates": self.replicates,
                "seed": self.seed,
                "per_replicate_quantiles": list(self.per_replicate_quantiles),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "TukeyCalibration":
        d = json.loads(text)
        return cls(
            g_factor=d["g_factor"],
            target_rate=d["target_rate"],
            replicates=d["replicates"],
            seed=d["seed"],
            per_replicate_quantiles=tuple(d["per_replicate_quantiles"]),
        )

    @classmethod
    def fixed(cls, g_factor: float) -> "TukeyCalibration":
        """Calibration record for an externally chosen multiplier."""
        return cls(g_factor, 0.0001, 1, 0, (g_factor,))


def _psd_repair(cov: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues to zero, then rescale to keep the diagonal."""
    sym = 0.5 * (cov + cov.T)
    w, v = np.linalg.eigh(sym)
    if w.min() >= 0:
        return sym
    w = np.clip(w, 0.0, None)
    fixed = (v * w) @ v.T
    d_old = np.diag(sym).copy()
    d_new = np.diag(fixed).copy()
    scale = np.ones_like(d_new)
    ok = (d_new > 0) & (d_old > 0)
    scale[ok] = np.sqrt(d_old[ok] / d_new[ok])
    return fixed * np.outer(scale, scale)


def robust_covariance(m: ExpressionMatrix) -> np.ndarray:
    """Robust inter-sample covariance: MAD scales with rank correlations.

    Per-column scale is 1.4826 * MAD (normal-consistent); correlation is
    the Spearman rank correlation mapped through 2*sin(pi*rho/6) to the
    normal scale; the assembled matrix is symmetrized and floored at zero
    eigenvalues with the diagonal preserved.
    """
    if m.n_features < 3:
        raise DimensionError("need G >= 3 rows to estimate covariance")
    med = np.median(m.values, axis=0)
    mad = np.median(np.abs(m.values - med), axis=0)
    if (mad == 0).any():
        j = int(np.flatnonzero(mad == 0)[0])
        raise DegenerateScaleError(f"column {m.sample_ids[j]!r} has zero MAD")
    scale = 1.4826 * mad
    ranks = np.apply_along_axis(stats.rankdata, 0, m.values)
    rho = np.corrcoef(ranks, rowvar=False)
    corr = 2.0 * np.sin(np.pi * rho / 6.0)
    cov = corr * np.outer(scale, scale)
    return _psd_repair(cov)


def _normal_factor(cov: np.ndarray) -> np.ndarray:
    sym = _psd_repair(np.asarray(cov, dtype=np.float64))
    w, v = np.linalg.eigh(sym)
    w = np.clip(w, 0.0, None)
    factor = v * np.sqrt(w)
    if not np.isfinite(factor).all():
        raise DataError("covariance is not usable even after PSD repair")
    return factor


def _replicate_quantile(rng, n, n_features, factor, target_rate) -> float:
    z = rng.standard_normal((n_features, n))
    x = np.sort(z @ factor.T, axis=0)
    dm = DistanceMatrix(_kernels.pairwise_dists(np.ascontiguousarray(x.T)))
    bs = extract_borders(dm)
    iqr = robust_iqr(bs)
    ratios = np.empty(n)
    for border in bs.borders:
        for j in border.members:
            ratios[j] = border.distance / iqr
    return float(np.quantile(ratios, 1.0 - target_rate))


def calibrate_g(
    n: int,
    n_features: int,
    cov: np.ndarray,
    target_rate: float = 0.0001,
    replicates: int = 100,
    seed: int = 0,
    threads: int = 1,
) -> TukeyCalibration:
    """Estimate the fence multiplier from matched normal surrogates.

    Each replicate draws an ``n_features x n`` matrix whose rows are
    i.i.d. n-variate normals with covariance ``cov``, pushes it through
    the same column-sort / border-extraction path as real data, and
    records the empirical (1 - target_rate) quantile of the per-column
    ratios (border distance / median border distance).  The calibrated
    multiplier is the median of those quantiles.  Deterministic for a
    given seed; replicates run on derived, order-independent seeds.
    """
    if replicates < 1:
        raise DomainError("need at least one replicate")
    if not 0.0 < target_rate < 1.0:
        raise DomainError("target_rate must lie in (0, 1)")
    cov = np.asarray(cov, dtype=np.float64)
    if cov.shape != (n, n):
        raise DimensionError(f"covariance must be {n}x{n}, got {cov.shape}")
    factor = _normal_factor(cov)
    children = np.random.SeedSequence(seed).spawn(replicates)

    def one(i: int) -> float:
        rng = np.random.default_rng(children[i])
        return _replicate_quantile(rng, n, n_features, factor, target_rate)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            quantiles = list(pool.map(one, range(replicates)))
    else:
        quantiles = [one(i) for i in range(replicates)]
    return TukeyCalibration(
        g_factor=float(np.median(quantiles)),
        target_rate=target_rate,
        replicates=replicates,
        seed=seed,
        per_replicate_quantiles=tuple(quantiles),
    )


@dataclass(frozen=True)
class FlaggedSample:
    sample_id: str
    column: int
    pair_index: int
    rule: str


@dataclass(frozen=True)
class OutlierReport:
    """Border pairs of one scope with the fence verdict.

    ``flagged_pairs`` is the maximal prefix of ``pairs`` whose intra-pair
    distance exceeds the benchmark (border distances are non-increasing,
    so the exceedances form a prefix).
    """

    scope: str
    sample_ids: tuple[str, ...]
    pairs: tuple[Border, ...]
    iqr_estimate: float
    g_factor: float
    benchmark: float
    flagged_pairs: tuple[Border, ...]
    flagged_samples: tuple[FlaggedSample, ...]

    def pair_labels(self) -> list[tuple[str, ...]]:
        return [tuple(self.sample_ids[j] for j in b.members) for b in self.pairs]


def _scope_report(
    values: np.ndarray,
    columns: np.ndarray,
    ids: tuple[str, ...],
    g_factor: float,
    scope: str,
    flag_both: bool,
) -> OutlierReport:
    sub = np.ascontiguousarray(values[:, columns])
    dm = DistanceMatrix(_kernels.pairwise_dists(np.ascontiguousarray(sub.T)))
    bs = extract_borders(dm)
    iqr = robust_iqr(bs)
    benchmark = g_factor * iqr

    deep_members = bs.deepest_members
    deep_curve = sub[:, list(deep_members)].mean(axis=1)

    flagged_pairs = []
    flagged = []
    for k, border in enumerate(bs.borders):
        if len(border.members) < 2 or not border.distance > benchmark:
            break
        flagged_pairs.append(border)
        a, b = border.members
        if flag_both:
            chosen, rule = (a, b), "both-members"
        else:
            da = np.linalg.norm(sub[:, a] - deep_curve)
            db = np.linalg.norm(sub[:, b] - deep_curve)
            chosen, rule = ((b,) if db > da else (a,)), "farther-from-deepest"
        for c in chosen:
            flagged.append(FlaggedSample(ids[columns[c]], int(columns[c]), k, rule))

    remap = [Border(tuple(int(columns[j]) for j in b.members), b.distance) for b in bs.borders]
    remap_flagged = remap[: len(flagged_pairs)]
    return OutlierReport(
        scope=scope,
        sample_ids=ids,
        pairs=tuple(remap),
        iqr_estimate=iqr,
        g_factor=g_factor,
        benchmark=benchmark,
        flagged_pairs=tuple(remap_flagged),
        flagged_samples=tuple(flagged),
    )


def detect_outliers(
    m: ExpressionMatrix,
    cal: TukeyCalibration,
    scope: str = "global",
    labels: Optional[ClassPartition] = None,
    flag_both: bool = False,
) -> list[OutlierReport]:
    """Flag border pairs whose distance exceeds g_factor * robust IQR.

    Requires column-sorted input (the representation the depth is defined
    on).  Global scope screens all columns together; per-class scope
    repeats the border construction and IQR estimate inside each class,
    reusing the globally calibrated multiplier.  From each flagged pair
    the member farther from the deepest curve is reported (both members
    with ``flag_both``).
    """
    if not m.sorted_flag:
        raise DomainError("detect_outliers requires column-sorted input (see column_sort)")
    if scope == "global":
        cols = np.arange(m.n_samples, dtype=np.intp)
        return [_scope_report(m.values, cols, m.sample_ids, cal.g_factor, "global", flag_both)]
    if scope == "per_class":
        if labels is None:
            raise DomainError("per-class scope requires class labels")
        reports = []
        for k in range(1, labels.class_count + 1):
            cols = labels.members(k)
            reports.append(
                _scope_report(m.values, cols, m.sample_ids, cal.g_factor, f"class {k}", flag_both)
            )
        return reports
    raise DomainError(f"unknown scope {scope!r}")


# ---------------------------------------------------------------------------
# rendering and serialization


def format_report_table(report: OutlierReport, title: str = "", max_pairs: int = 8) -> str:
    """Plain-text table in the published layout (least-deep pairs first)."""
    shown = report.pairs[:max_pairs]
    top, bottom, dist = [], [], []
    for b in shown:
        ids = [report.sample_ids[j] for j in b.members]
        top.append(ids[0])
        bottom.append(ids[1] if len(ids) > 1 else "-")
        dist.append(f"{b.distance:,.1f}")
    width = max(8, *(len(s) for s in top + bottom + dist)) + 2
    label_w = len("distance intra-pair") + 2

    def row(label, cells):
        return label.ljust(label_w) + "".join(c.rjust(width) for c in cells)

    lines = []
    if title:
        lines.append(title.center(label_w + width * len(shown)))
    lines.append("-" * (label_w + width * len(shown)))
    lines.append(row("pairs of gene", top))
    lines.append(row("expressions", bottom))
    lines.append(row("distance intra-pair", dist))
    lines.append(row("outlier's benchmark", [f"{report.benchmark:,.1f}"]))
    lines.append(row("Tukey's constant", [f"{report.g_factor:g}"]))
    flagged = ", ".join(s.sample_id for s in report.flagged_samples) or "none"
    lines.append(f"potential outliers: {flagged}")
    return "\n".join(lines)


def save_report_csv(reports: list[OutlierReport], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["scope", "pair_index", "member_1", "member_2", "distance_intra_pair",
             "iqr_estimate", "benchmark", "tukey_constant", "flagged", "flagged_member"]
        )
        for rep in reports:
            flagged_by_pair = {s.pair_index: s.sample_id for s in rep.flagged_samples}
            for k, b in enumerate(rep.pairs):
                ids = [rep.sample_ids[j] for j in b.members]
                w.writerow(
                    [
                        rep.scope,
                        k + 1,
                        ids[0],
                        ids[1] if len(ids) > 1 else "",
                        repr(b.distance),
                        repr(rep.iqr_estimate),
                        repr(rep.benchmark),
                        repr(rep.g_factor),
                        int(k < len(rep.flagged_pairs)),
                        flagged_by_pair.get(k, ""),
                    ]
                )


def reports_to_json(reports: list[OutlierReport]) -> str:
    payload = []
    for rep in reports:
        payload.append(
            {
                "scope": rep.scope,
                "flagged_samples": [s.sample_id for s in rep.flagged_samples],
                "rule": rep.flagged_samples[0].rule if rep.flagged_samples else "farther-from-deepest",
                "benchmark": rep.benchmark,
                "iqr_estimate": rep.iqr_estimate,
                "tukey_constant": rep.g_factor,
                "pairs": [
                    {
                        "members": [rep.sample_ids[j] for j in b.members],
                        "distance": b.distance,
                    }
                    for b in rep.pairs
                ],
            }
        )
    return json.dumps({"reports": payload}, indent=2)
