"""Error measures between matrices and between binary distributions."""
from __future__ import annotations

import csv
import io
import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

__all__ = [
    "AccuracyReport",
    "hellinger_sq",
    "hellinger",
    "kl_divergence",
    "rel_fro_error",
    "sign_accuracy",
]


def _probs(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    for name, a in (("p", p), ("q", q)):
        if np.any((a < 0) | (a > 1)) or not np.all(np.isfinite(a)):
            raise ValueError(f"{name} entries must lie in [0, 1]")
    return p, q


def hellinger_sq(p, q) -> float:
    """Mean over entries of ``(sqrt p - sqrt q)^2 + (sqrt(1-p) - sqrt(1-q))^2``.

    Scalars are treated as 1x1 matrices. The result lies in ``[0, 2]``.
    """
    p, q = _probs(p, q)
    per = (np.sqrt(p) - np.sqrt(q)) ** 2 + (np.sqrt(1.0 - p) - np.sqrt(1.0 - q)) ** 2
    return float(np.mean(per))


def hellinger(p, q) -> float:
    """Square root of :func:`hellinger_sq`."""
    return float(np.sqrt(hellinger_sq(p, q)))


def kl_divergence(p, q) -> float:
    """Mean over entries of the Bernoulli KL divergence ``D(p || q)``.

    Uses ``0 log 0 = 0``. If some ``q`` entry is 0 or 1 while the matching
    ``p`` puts mass where ``q`` has none, the divergence is infinite; ``inf``
    is returned with a RuntimeWarning instead of clamping.
    """
    p, q = _probs(p, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = xlogy(p, p) - xlogy(p, q)
        b = xlogy(1.0 - p, 1.0 - p) - xlogy(1.0 - p, 1.0 - q)
    per = a + b
    if np.any(np.isinf(per)) or np.any(np.isnan(per)):
        warnings.warn("KL divergence is infinite: q has a zero where p does not", RuntimeWarning, stacklevel=2)
        return float("inf")
    # tiny negative values from rounding
    return float(max(np.mean(per), 0.0))


def rel_fro_error(m_hat, m) -> float:
    """``||m_hat - m||_F^2 / ||m||_F^2``."""
    m_hat = np.asarray(m_hat, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if m_hat.shape != m.shape:
        raise ValueError(f"shape mismatch: {m_hat.shape} vs {m.shape}")
    denom = float(np.sum(m * m))
    if denom == 0:
        raise ValueError("reference matrix is zero; relative error undefined")
    return float(np.sum((m_hat - m) ** 2)) / denom


@dataclass(frozen=True)
class AccuracyReport:
    """Fraction of correctly predicted signs, bucketed by original rating."""

    per_rating: dict
    overall: float
    counts: dict
    correct: dict

    def to_rows(self, label: str = "1-bit matrix completion") -> tuple[list, list]:
        keys = sorted(self.per_rating)
        header = ["method"] + [_fmt_key(k) for k in keys] + ["overall"]
        row = [label] + [f"{self.per_rating[k]:.6f}" for k in keys] + [f"{self.overall:.6f}"]
        return header, row

    def to_csv(self, extra_rows=(), label: str = "1-bit matrix completion") -> str:
        """Table-shaped CSV: one column per rating value plus ``overall``.

        `extra_rows` are ``(label, {rating: fraction}, overall)`` triples, e.g.
        reference numbers to compare against.
        """
        header, row = self.to_rows(label)
        keys = sorted(self.per_rating)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerow(row)
        for name, per, overall in extra_rows:
            writer.writerow([name] + [_fmt_opt(per.get(k)) for k in keys] + [_fmt_opt(overall)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "per_rating": {_fmt_key(k): v for k, v in sorted(self.per_rating.items())},
            "counts": {_fmt_key(k): v for k, v in sorted(self.counts.items())},
            "overall": self.overall,
        }


def _fmt_key(k) -> str:
    k = float(k)
    return str(int(k)) if k.is_integer() else repr(k)


def _fmt_opt(v) -> str:
    return "" if v is None else f"{v:.6f}"


def sign_accuracy(predicted, holdout) -> AccuracyReport:
    """Score ``sign(predicted[i, j])`` against held-out binary labels.

    `holdout` is an iterable of ``(i, j, original_rating, label)`` with label
    in {-1, +1}. A prediction of exactly zero counts as +1.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    holdout = list(holdout)
    if not holdout:
        raise ValueError("holdout set is empty")
    counts: Counter = Counter()
    correct: Counter = Counter()
    for i, j, rating, label in holdout:
        if label not in (-1, 1):
            raise ValueError(f"binary label must be -1 or +1, got {label!r}")
        guess = 1 if predicted[i, j] >= 0 else -1
        counts[rating] += 1
        correct[rating] += int(guess == label)
    per_rating = {k: correct[k] / counts[k] for k in counts}
    overall = sum(correct.values()) / sum(counts.values())
    return AccuracyReport(per_rating, overall, dict(counts), dict(correct))
