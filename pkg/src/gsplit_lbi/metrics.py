"""Evaluation metrics: accuracy, ranking AUC, support overlap, estimation error.

The AUC here is the exact Mann-Whitney statistic computed by sorting and
rank-summing rather than trapezoidal integration of an ROC sweep, so ties
contribute 1/2 per tied pair and results are reproducible to the last bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "accuracy",
    "auc",
    "support_recovery_auc",
    "multiset_dice",
    "estimation_errors",
    "sign_consistency",
]


def accuracy(scores, labels) -> float:
    """Fraction of sign agreements between scores and labels in {-1, +1}.

    A score of exactly zero counts as +1.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError(f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors")
    if scores.size == 0:
        raise ValueError("empty score vector")
    pred = np.where(scores >= 0, 1.0, -1.0)
    return float(np.mean(pred == labels))


def auc(scores, labels) -> float:
    """Exact area under the ROC curve of scores against binary labels.

    labels may be {0, 1} or {-1, +1}; anything positive is the positive
    class. Equivalent to the Mann-Whitney U statistic normalized by the
    number of positive-negative pairs, with ties counted half. Computed from
    midranks, O(n log n).
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError(f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors")
    pos = np.asarray(labels, dtype=float) > 0
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc needs at least one positive and one negative label")
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    # midranks: average the 1-based ranks over each tied block; the direct
    # inequality (not diff != 0) keeps tied +-inf scores in one block
    boundaries = np.flatnonzero(sorted_scores[1:] != sorted_scores[:-1]) + 1
    starts = np.concatenate([[0], boundaries])
    stops = np.concatenate([boundaries, [scores.size]])
    midrank_per_block = (starts + stops + 1) / 2.0
    block_of = np.repeat(np.arange(starts.size), stops - starts)
    ranks = np.empty(scores.size)
    ranks[order] = midrank_per_block[block_of]
    rank_sum_pos = ranks[pos].sum()
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def support_recovery_auc(gamma_vertex, true_support) -> float:
    """How well |gamma| ranks the true support above its complement."""
    gamma_vertex = np.asarray(gamma_vertex, dtype=float)
    mask = np.zeros(gamma_vertex.size, dtype=bool)
    mask[np.asarray(true_support, dtype=int)] = True
    return auc(np.abs(gamma_vertex), mask.astype(float))


def multiset_dice(supports) -> float:
    """Overlap of K index sets: K * |common intersection| / sum of sizes.

    Equals 1 when all sets coincide and are nonempty, 0 when the
    intersection is empty. All-empty input returns 0 by convention.
    """
    supports = [np.unique(np.asarray(s, dtype=int)) for s in supports]
    if len(supports) < 2:
        raise ValueError("multiset_dice needs at least two supports")
    total = sum(s.size for s in supports)
    if total == 0:
        return 0.0
    common = supports[0]
    for s in supports[1:]:
        common = np.intersect1d(common, s, assume_unique=True)
    return float(len(supports) * common.size / total)


def estimation_errors(beta_pre, beta_les, data) -> dict[str, float]:
    """Euclidean errors of both estimators against the generating beta.

    Keys: beta_les_err, beta_pre_err, xbeta_les_err, xbeta_pre_err. The
    x-prefixed entries measure error in prediction space, X beta versus
    X beta_star. Requires data.beta_star.
    """
    if data.beta_star is None:
        raise ValueError("dataset carries no ground-truth coefficients")
    bstar = data.beta_star
    beta_pre = np.asarray(beta_pre, dtype=float)
    beta_les = np.asarray(beta_les, dtype=float)
    return {
        "beta_les_err": float(np.linalg.norm(beta_les - bstar)),
        "beta_pre_err": float(np.linalg.norm(beta_pre - bstar)),
        "xbeta_les_err": float(np.linalg.norm(data.X @ (beta_les - bstar))),
        "xbeta_pre_err": float(np.linalg.norm(data.X @ (beta_pre - bstar))),
    }


def sign_consistency(gamma_vertex, beta_star, tol=0.0) -> bool:
    """True when sign(gamma) matches sign(beta_star) coordinatewise.

    Entries of gamma with magnitude at most tol count as zero.
    """
    gamma_vertex = np.asarray(gamma_vertex, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float)
    if gamma_vertex.shape != beta_star.shape:
        raise ValueError("gamma and beta_star must have the same shape")
    g = np.where(np.abs(gamma_vertex) > tol, np.sign(gamma_vertex), 0.0)
    return bool(np.array_equal(g, np.sign(beta_star)))
