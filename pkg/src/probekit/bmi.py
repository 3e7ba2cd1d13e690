"""Bayesian mutual information between representations and a discrete property.

``H(P)`` is the expected entropy of a Categorical under the Dirichlet
posterior given the training label counts. ``H(P|Z)`` is the held-out
cross-entropy of a MAP logistic probe. Their difference is recorded at
growing training sizes to form a curve.
"""

from __future__ import annotations

import csv
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import digamma

from probekit.core import ProbingDataset, Split, split_random, split_stratified, subsample
from probekit.probes import FitOptions, LinearProbe, fit_logistic, predict_proba

__all__ = [
    "PROB_FLOOR",
    "DEFAULT_SIZES",
    "BmiPoint",
    "BmiCurve",
    "entropy_dirichlet",
    "conditional_entropy",
    "bmi_curve",
]

PROB_FLOOR = 1e-12
DEFAULT_SIZES: tuple[int | str, ...] = (100, 1000, 10000, "all")


def entropy_dirichlet(counts: Sequence[float], alpha: Sequence[float] | float | None = None) -> float:
    """Posterior-expected Categorical entropy (nats) under ``Dirichlet(alpha + counts)``."""
    n = np.asarray(counts, dtype=np.float64)
    if n.ndim != 1 or n.size < 1:
        raise ValueError("counts must be a non-empty 1-D sequence")
    if np.any(n < 0):
        raise ValueError("counts must be non-negative")
    if n.sum() < 1:
        raise ValueError("entropy_dirichlet needs at least one observation")
    a = np.ones_like(n) if alpha is None else np.broadcast_to(np.asarray(alpha, dtype=np.float64), n.shape)
    if np.any(a <= 0):
        raise ValueError("Dirichlet concentrations must be > 0")
    post = a + n
    A = post.sum()
    return float(digamma(A + 1.0) - np.sum(post / A * digamma(post + 1.0)))


def conditional_entropy(probe: LinearProbe, eval: ProbingDataset, return_clamped: bool = False):
    """Mean ``-ln q(p_i | z_i)`` over ``eval``; probabilities below 1e-12 are clamped.

    With ``return_clamped`` the number of clamped rows is returned as well.
    """
    if eval.n == 0:
        raise ValueError("evaluation set is empty")
    if not eval.kind.is_discrete_class:
        raise ValueError(f"conditional entropy needs a binary/categorical property, got {eval.kind}")
    P = predict_proba(probe, eval.Z)
    y = eval.p.astype(np.int64)
    if np.any(y >= P.shape[1]):
        raise ValueError("evaluation labels exceed the probe's class count")
    q = P[np.arange(eval.n), y]
    low = q < PROB_FLOOR
    n_clamped = int(low.sum())
    if n_clamped:
        warnings.warn(f"{n_clamped} predicted probabilities clamped at {PROB_FLOOR:g}", RuntimeWarning, stacklevel=2)
    h = float(np.mean(-np.log(np.where(low, PROB_FLOOR, q))))
    return (h, n_clamped) if return_clamped else h


@dataclass(frozen=True)
class BmiPoint:
    n_train: int
    h_p: float
    h_p_given_z: float
    bmi: float
    converged: bool = True
    n_clamped: int = 0


@dataclass(frozen=True)
class BmiCurve:
    points: tuple[BmiPoint, ...]
    alpha: tuple[float, ...]
    l2: float
    seed: int
    n_eval: int
    skipped: tuple[tuple[int, str], ...] = field(default=())

    CSV_FIELDS = ("n_train", "h_p", "h_p_given_z", "bmi")

    def to_json(self) -> dict:
        return {
            "points": [vars(p).copy() for p in self.points],
            "alpha": list(self.alpha),
            "l2": self.l2,
            "seed": self.seed,
            "n_eval": self.n_eval,
            "skipped": [{"n_train": m, "reason": r} for m, r in self.skipped],
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.CSV_FIELDS)
            for p in self.points:
                w.writerow([p.n_train, repr(p.h_p), repr(p.h_p_given_z), repr(p.bmi)])

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _resolve_sizes(sizes, n_train: int) -> list[int]:
    explicit = sizes is not None
    out = set()
    for s in (DEFAULT_SIZES if sizes is None else sizes):
        if s == "all":
            out.add(n_train)
            continue
        m = int(s)
        if m < 2:
            raise ValueError(f"training size {m} is too small; need >= 2")
        if m > n_train:
            if explicit:
                raise ValueError(f"training size {m} exceeds the {n_train} available training rows")
            continue
        out.add(m)
    if not out:
        raise ValueError("no usable training sizes")
    return sorted(out)


def _resolve_split(dataset: ProbingDataset, eval_split, seed: int) -> Split:
    if isinstance(eval_split, Split):
        return eval_split
    frac = 0.2 if eval_split is None else float(eval_split)
    try:
        return split_stratified(dataset.p, frac, seed)
    except ValueError:
        return split_random(dataset.n, frac, seed)


def bmi_curve(
    dataset: ProbingDataset,
    sizes: Sequence[int | str] | None = None,
    eval_split: Split | float | None = None,
    alpha: Sequence[float] | float | None = None,
    l2: float = 1.0,
    seed: int = 0,
    opts: FitOptions | None = None,
    workers: int = 1,
) -> BmiCurve:
    """BMI at each training size, all evaluated on one fixed held-out set.

    ``l2`` is the precision of the Gaussian weight prior, so the probe
    fitted on ``m`` rows is the exact MAP estimate of that prior (mean
    objective strength ``l2 / m``). ``sizes`` may contain ``"all"``; the
    default drops sizes larger than the training side.
    """
    if not dataset.kind.is_discrete_class:
        raise ValueError(f"BMI needs a binary/categorical property, got {dataset.kind}")
    if l2 <= 0:
        raise ValueError("l2 must be > 0 for the Gaussian-prior interpretation")
    split = _resolve_split(dataset, eval_split, seed)
    train, ev = dataset.take(split.train_idx), dataset.take(split.test_idx)
    ms = _resolve_sizes(sizes, train.n)
    C = dataset.kind.classes
    a = np.ones(C) if alpha is None else np.broadcast_to(np.asarray(alpha, dtype=np.float64), (C,)).copy()
    base = opts or FitOptions()

    def point(m: int):
        sub = subsample(train, m, seed)
        counts = np.bincount(sub.p.astype(np.int64), minlength=C)
        h_p = entropy_dirichlet(counts, a)
        probe_opts = FitOptions(max_iter=base.max_iter, tol=base.tol, l2=l2 / m, seed=base.seed)
        try:
            probe = fit_logistic(sub.Z, sub.p, probe_opts, n_classes=C)
        except ValueError as exc:
            return None, (m, str(exc))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            h_pz, clamped = conditional_entropy(probe, ev, return_clamped=True)
        return BmiPoint(m, h_p, h_pz, h_p - h_pz, probe.converged, clamped), None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(point, ms))
    else:
        results = [point(m) for m in ms]
    points = tuple(p for p, _ in results if p is not None)
    skipped = tuple(s for _, s in results if s is not None)
    total_clamped = sum(p.n_clamped for p in points)
    if total_clamped:
        warnings.warn(f"{total_clamped} predicted probabilities clamped at {PROB_FLOOR:g}", RuntimeWarning,
                      stacklevel=2)
    return BmiCurve(points, tuple(float(x) for x in a), float(l2), int(seed), ev.n, skipped)
