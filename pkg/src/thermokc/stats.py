"""Correlation and goodness-of-fit statistics used by the experiment reports.

Pearson r = cov(x, y) / (sd(x) sd(y)).
Spearman rho = Pearson r of the average ranks (ties share their mean rank).
Chi-square X2 = sum (O - E)^2 / E with p = Q(dof / 2, X2 / 2), the regularized
upper incomplete gamma function.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaincc


def pearson(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """None when fewer than 3 points or either side is constant."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("pearson needs equal-length inputs")
    if a.size < 3:
        return None
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom == 0.0:
        return None
    return float(a @ b) / denom


def average_ranks(x: Sequence[float]) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(a.size, dtype=np.float64)
    sorted_a = a[order]
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    if len(x) != len(y):
        raise ValueError("spearman needs equal-length inputs")
    if len(x) < 3:
        return None
    return pearson(average_ranks(x), average_ranks(y))


def chi_square(observed: Sequence[float], expected_prob: Sequence[float]) -> tuple[float, int, float]:
    """Returns (statistic, degrees of freedom, p-value) for counts vs probabilities."""
    obs = np.asarray(observed, dtype=np.float64)
    p = np.asarray(expected_prob, dtype=np.float64)
    if obs.shape != p.shape:
        raise ValueError("observed and expected must align")
    keep = p > 0
    if np.any(obs[~keep] > 0):
        return math.inf, int(keep.sum()) - 1, 0.0
    expected = obs.sum() * p[keep] / p[keep].sum()
    stat = float((((obs[keep] - expected) ** 2) / expected).sum())
    dof = int(keep.sum()) - 1
    return stat, dof, float(gammaincc(dof / 2.0, stat / 2.0))
