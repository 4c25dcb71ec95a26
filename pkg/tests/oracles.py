"""Independent reference implementations the tests check against.

These deliberately share no code with the package: the border oracle
rescans the full distance matrix every round (O(n^3)), the fence oracle
applies the classic one-dimensional rule, and the biweight oracle is a
direct transcription of the weighting iteration.
"""

import numpy as np


def borders_oracle(d: np.ndarray):
    """Rescan-every-round farthest-pair extraction.

    Ties broken toward the lexicographically smallest (i, j), matching
    the library rule.  Returns [(members, distance), ...].
    """
    n = d.shape[0]
    remaining = list(range(n))
    out = []
    while len(remaining) >= 2:
        best = None
        for a in range(len(remaining)):
            for b in range(a + 1, len(remaining)):
                i, j = remaining[a], remaining[b]
                key = (-d[i, j], i, j)
                if best is None or key < best[0]:
                    best = (key, (i, j))
        i, j = best[1]
        out.append(((i, j), d[i, j]))
        remaining.remove(i)
        remaining.remove(j)
    if remaining:
        out.append(((remaining[0],), 0.0))
    return out


def hinge_iqr(x: np.ndarray) -> float:
    """Fourth-spread: median of upper half minus median of lower half
    (halves include the sample median for odd n)."""
    xs = np.sort(np.asarray(x, dtype=float))
    n = xs.size
    half = (n + 1) // 2
    return float(np.median(xs[n - half:]) - np.median(xs[:half]))


def tukey_fence_flags_extremes(x: np.ndarray, g: float) -> bool:
    """Classic rule: is max above the upper fence or min below the lower?"""
    xs = np.sort(np.asarray(x, dtype=float))
    n = xs.size
    half = (n + 1) // 2
    q1 = float(np.median(xs[:half]))
    q3 = float(np.median(xs[n - half:]))
    iqr = q3 - q1
    return bool(xs[-1] > q3 + g * iqr or xs[0] < q1 - g * iqr)


def biweight_oracle(x: np.ndarray, c: float = 5.0, eps: float = 1e-4) -> float:
    x = np.asarray(x, dtype=float)
    t = float(np.median(x))
    mad = float(np.median(np.abs(x - t)))
    if mad == 0:
        return t
    for _ in range(50):
        u = (x - t) / (c * mad + eps)
        w = np.where(np.abs(u) < 1, (1 - u**2) ** 2, 0.0)
        if w.sum() == 0:
            return t
        t_new = float((w * x).sum() / w.sum())
        if abs(t_new - t) <= 1e-9:
            return t_new
        t = t_new
    return t


def medpolish_oracle(block: np.ndarray, max_iter: int, tol: float):
    """Row-first alternating sweeps, R-style relative L1 stop rule."""
    resid = np.array(block, dtype=float)
    p, n = resid.shape
    overall = 0.0
    row = np.zeros(p)
    col = np.zeros(n)
    oldsum = 0.0
    for _ in range(max_iter):
        rd = np.median(resid, axis=1)
        resid -= rd[:, None]
        row += rd
        d = np.median(col)
        col -= d
        overall += d
        cd = np.median(resid, axis=0)
        resid -= cd
        col += cd
        d = np.median(row)
        row -= d
        overall += d
        s = np.abs(resid).sum()
        if s == 0 or abs(s - oldsum) < tol * s:
            break
        oldsum = s
    return overall, row, col, resid
