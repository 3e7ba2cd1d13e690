"""Linear probes (logistic, ridge, Poisson) and the metrics reported for them.

All iterative fits start from zero weights and use damped Newton steps
with an Armijo backtracking line search, so a fit is a deterministic
function of its inputs and the objective never increases between
iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from probekit.core import (
    EmbeddingTable,
    EmptyJoinError,
    LabelTable,
    Standardizer,
    apply_standardizer,
    fit_standardizer,
    join,
    split_from_ids,
    split_random,
    split_stratified,
)

__all__ = [
    "SingleClassError",
    "SingularSystemError",
    "FitOptions",
    "LinearProbe",
    "SplitPlan",
    "ReportRow",
    "DEFAULT_L2",
    "logistic_objective",
    "poisson_objective",
    "fit_logistic",
    "fit_linear",
    "fit_poisson",
    "predict",
    "predict_proba",
    "roc_auc",
    "r2",
    "run_linear_probing",
]

DEFAULT_L2 = {"logistic": 1.0, "poisson": 1.0, "ridge": 1e-6}


class SingleClassError(ValueError):
    pass


class SingularSystemError(ValueError):
    pass


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 100
    tol: float = 1e-8
    l2: float | None = None  # None: per-family default from DEFAULT_L2
    seed: int = 0  # unused by the zero-initialised solvers; kept for reproducible records

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.l2 is not None and self.l2 < 0:
            raise ValueError("l2 must be >= 0")

    def strength(self, family: str) -> float:
        return DEFAULT_L2[family] if self.l2 is None else float(self.l2)


@dataclass(frozen=True)
class LinearProbe:
    """Affine predictor ``link^-1(W x + b)`` on standardized inputs.

    ``weights`` is ``(d,)`` for binary/ridge/Poisson probes and ``(K, d)``
    for multinomial ones, where ``classes`` lists the K labels the probe
    was fitted on out of ``n_classes``.
    """

    weights: np.ndarray
    bias: float | np.ndarray
    link: str
    l2: float
    standardizer: Standardizer | None = None
    classes: np.ndarray | None = None
    n_classes: int | None = None
    converged: bool = True
    n_iter: int = 0
    history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def d(self) -> int:
        return self.weights.shape[-1]

    @property
    def multiclass(self) -> bool:
        return self.weights.ndim == 2

    def transform(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[1] != self.d:
            raise ValueError(f"probe expects {self.d} features, got shape {Z.shape}")
        return apply_standardizer(self.standardizer, Z) if self.standardizer is not None else Z

    def linear_predictor(self, Z: np.ndarray) -> np.ndarray:
        X = self.transform(Z)
        if self.multiclass:
            return X @ self.weights.T + self.bias
        return X @ self.weights + self.bias

    def raw_coefficients(self) -> tuple[np.ndarray, float | np.ndarray]:
        """Weights and bias expressed on the unstandardized inputs."""
        if self.standardizer is None:
            return self.weights.copy(), self.bias
        s = self.standardizer
        w = self.weights / s.scale
        return w, self.bias - w @ s.mean


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _penalty_mask(d: int) -> np.ndarray:
    m = np.ones(d + 1)
    m[-1] = 0.0
    return m


def logistic_objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float,
                       n_classes: int = 2) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood plus ``l2/2 * ||w||^2`` (bias unpenalized), and its gradient.

    Binary: ``theta = [w, b]``. Multinomial: ``theta`` is the flattened
    ``(K, d+1)`` matrix of per-class ``[w_k, b_k]`` and ``y`` holds class
    positions ``0..K-1``.
    """
    Xa = _augment(X)
    n, d1 = Xa.shape
    mask = _penalty_mask(d1 - 1)
    if n_classes == 2:
        eta = Xa @ theta
        f = np.mean(np.logaddexp(0.0, eta) - y * eta) + 0.5 * l2 * np.sum(mask * theta**2)
        p = 0.5 * (1.0 + np.tanh(0.5 * eta))
        g = Xa.T @ (p - y) / n + l2 * mask * theta
        return float(f), g
    T = theta.reshape(n_classes, d1)
    eta = Xa @ T.T
    lse = np.logaddexp.reduce(eta, axis=1)
    f = np.mean(lse - eta[np.arange(n), y.astype(np.int64)]) + 0.5 * l2 * np.sum(mask * T**2)
    P = np.exp(eta - lse[:, None])
    P[np.arange(n), y.astype(np.int64)] -= 1.0
    G = P.T @ Xa / n + l2 * mask * T
    return float(f), G.ravel()


def _logistic_hessian(theta, X, y, l2, n_classes=2):
    Xa = _augment(X)
    n, d1 = Xa.shape
    mask = _penalty_mask(d1 - 1)
    if n_classes == 2:
        p = 0.5 * (1.0 + np.tanh(0.5 * (Xa @ theta)))
        H = (Xa * (p * (1 - p))[:, None]).T @ Xa / n
        return H + np.diag(l2 * mask)
    K = n_classes
    T = theta.reshape(K, d1)
    eta = Xa @ T.T
    P = np.exp(eta - np.logaddexp.reduce(eta, axis=1)[:, None])
    H = np.empty((K * d1, K * d1))
    for k in range(K):
        for j in range(k, K):
            wgt = P[:, k] * ((k == j) - P[:, j])
            block = (Xa * wgt[:, None]).T @ Xa / n
            H[k * d1:(k + 1) * d1, j * d1:(j + 1) * d1] = block
            H[j * d1:(j + 1) * d1, k * d1:(k + 1) * d1] = block.T
    H += np.diag(np.tile(l2 * mask, K))
    # softmax biases are shift-invariant; a tiny ridge keeps the step defined
    H += np.diag(np.tile(1e-10 * (1 - mask), K))
    return H


def poisson_objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> tuple[float, np.ndarray]:
    """Half the mean Poisson deviance (up to a constant) plus ``l2/2 * ||w||^2``, and its gradient."""
    Xa = _augment(X)
    n = Xa.shape[0]
    mask = _penalty_mask(Xa.shape[1] - 1)
    eta = Xa @ theta
    with np.errstate(over="ignore"):
        mu = np.exp(eta)
    f = np.mean(mu - y * eta) + 0.5 * l2 * np.sum(mask * theta**2)
    g = Xa.T @ (mu - y) / n + l2 * mask * theta
    return float(f), g


def _poisson_hessian(theta, X, y, l2):
    Xa = _augment(X)
    mu = np.exp(np.minimum(Xa @ theta, 700.0))
    H = (Xa * mu[:, None]).T @ Xa / Xa.shape[0]
    return H + np.diag(l2 * _penalty_mask(Xa.shape[1] - 1))


def _newton(fg: Callable, hess: Callable, theta: np.ndarray, max_iter: int, tol: float):
    f, g = fg(theta)
    history = [f]
    for it in range(max_iter):
        gnorm = float(np.linalg.norm(g))
        if not math.isfinite(f) or not math.isfinite(gnorm):
            return theta, False, it, history
        if gnorm <= tol:
            return theta, True, it, history
        H = hess(theta)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -g, rcond=None)[0]
        slope = float(g @ step)
        if not np.all(np.isfinite(step)) or slope >= 0:
            step, slope = -g, -gnorm**2
        t = 1.0
        while True:
            cand = theta + t * step
            f_new, g_new = fg(cand)
            if math.isfinite(f_new) and f_new <= f + 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-12:
                return theta, gnorm <= tol, it, history
        theta, f, g = cand, f_new, g_new
        history.append(f)
    return theta, float(np.linalg.norm(g)) <= tol, max_iter, history


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def _prepare(Z, standardize: bool):
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ValueError("Z must be a 2-D array")
    if Z.shape[0] < 2:
        raise ValueError(f"need at least 2 samples to fit a probe, got {Z.shape[0]}")
    S = fit_standardizer(Z) if standardize else None
    return (apply_standardizer(S, Z) if S is not None else Z), S


def fit_logistic(Z: np.ndarray, y: Sequence[int] | np.ndarray, opts: FitOptions | None = None,
                 n_classes: int | None = None, standardize: bool = True) -> LinearProbe:
    """L2-regularized logistic regression; multinomial when more than two classes are present.

    Minimizes the mean negative log-likelihood plus ``l2/2 * ||w||^2``. A
    fit that stops before the gradient tolerance is returned with
    ``converged=False``.
    """
    opts = opts or FitOptions()
    y = np.asarray(y, dtype=np.float64)
    X, S = _prepare(Z, standardize)
    if len(y) != X.shape[0]:
        raise ValueError("Z and y have different lengths")
    if np.any(y != np.round(y)) or np.any(y < 0):
        raise ValueError("class labels must be non-negative integers")
    classes = np.unique(y).astype(np.int64)
    if len(classes) < 2:
        raise SingleClassError(f"only one class ({classes[0] if len(classes) else 'none'}) present")
    l2 = opts.strength("logistic")
    C = int(n_classes if n_classes is not None else max(2, classes.max() + 1))
    d = X.shape[1]

    if C == 2 and set(classes) <= {0, 1}:
        fg = lambda th: logistic_objective(th, X, y, l2)
        hs = lambda th: _logistic_hessian(th, X, y, l2)
        theta, ok, it, hist = _newton(fg, hs, np.zeros(d + 1), opts.max_iter, opts.tol)
        return LinearProbe(theta[:d].copy(), float(theta[d]), "logit", l2, S, np.array([0, 1]), 2, ok, it, tuple(hist))

    K = len(classes)
    pos = np.searchsorted(classes, y.astype(np.int64)).astype(np.float64)
    if K == 2:
        # two classes present out of more: a binary logit is the same model with class 0 pinned at zero
        fg = lambda th: logistic_objective(th, X, pos, l2)
        hs = lambda th: _logistic_hessian(th, X, pos, l2)
        theta, ok, it, hist = _newton(fg, hs, np.zeros(d + 1), opts.max_iter, opts.tol)
        W = np.vstack([np.zeros(d), theta[:d]])
        return LinearProbe(W, np.array([0.0, theta[d]]), "logit", l2, S, classes, C, ok, it, tuple(hist))
    fg = lambda th: logistic_objective(th, X, pos, l2, K)
    hs = lambda th: _logistic_hessian(th, X, pos, l2, K)
    theta, ok, it, hist = _newton(fg, hs, np.zeros(K * (d + 1)), opts.max_iter, opts.tol)
    T = theta.reshape(K, d + 1)
    return LinearProbe(T[:, :d].copy(), T[:, d].copy(), "logit", l2, S, classes, C, ok, it, tuple(hist))


def fit_linear(Z: np.ndarray, y: Sequence[float] | np.ndarray, l2: float | None = None,
               standardize: bool = True) -> LinearProbe:
    """Closed-form ridge regression on centered data.

    Solves ``(Xc^T Xc + n*l2*I) w = Xc^T yc``; the bias restores the means.
    """
    l2 = DEFAULT_L2["ridge"] if l2 is None else float(l2)
    if l2 < 0:
        raise ValueError("l2 must be >= 0")
    y = np.asarray(y, dtype=np.float64)
    X, S = _prepare(Z, standardize)
    n, d = X.shape
    if len(y) != n:
        raise ValueError("Z and y have different lengths")
    xm, ym = X.mean(axis=0), y.mean()
    Xc, yc = X - xm, y - ym
    A = Xc.T @ Xc + n * l2 * np.eye(d)
    if l2 == 0.0:
        ev = np.linalg.eigvalsh(A)
        if ev[-1] <= 0 or ev[0] <= 1e-10 * ev[-1]:
            raise SingularSystemError("normal equations are singular at l2=0; use l2 > 0")
    w = np.linalg.solve(A, Xc.T @ yc)
    return LinearProbe(w, float(ym - xm @ w), "identity", l2, S)


def fit_poisson(Z: np.ndarray, y: Sequence[int] | np.ndarray, opts: FitOptions | None = None,
                standardize: bool = True) -> LinearProbe:
    """Poisson regression with log link, fitted by Newton/IRLS.

    The bias starts at ``log(mean(y))``; zero-mean targets have no finite
    maximum-likelihood bias and come back with ``converged=False``.
    """
    opts = opts or FitOptions()
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0) or np.any(y != np.round(y)) or not np.all(np.isfinite(y)):
        raise ValueError("Poisson targets must be non-negative integers")
    X, S = _prepare(Z, standardize)
    if len(y) != X.shape[0]:
        raise ValueError("Z and y have different lengths")
    l2 = opts.strength("poisson")
    d = X.shape[1]
    theta0 = np.zeros(d + 1)
    ybar = y.mean()
    if ybar > 0:
        theta0[d] = math.log(ybar)
    fg = lambda th: poisson_objective(th, X, y, l2)
    hs = lambda th: _poisson_hessian(th, X, y, l2)
    theta, ok, it, hist = _newton(fg, hs, theta0, opts.max_iter, opts.tol)
    return LinearProbe(theta[:d].copy(), float(theta[d]), "log", l2, S, converged=ok and ybar > 0,
                       n_iter=it, history=tuple(hist))


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


def predict(probe: LinearProbe, Z: np.ndarray) -> np.ndarray:
    """Ridge: predicted values. Poisson: predicted means. Logistic: decision scores."""
    eta = probe.linear_predictor(Z)
    if probe.link == "log":
        with np.errstate(over="ignore"):
            return np.exp(eta)
    return eta


def predict_proba(probe: LinearProbe, Z: np.ndarray) -> np.ndarray:
    """Class probabilities, one column per class ``0..n_classes-1``."""
    if probe.link != "logit":
        raise ValueError("predict_proba needs a logistic probe")
    eta = probe.linear_predictor(Z)
    if not probe.multiclass:
        p1 = 0.5 * (1.0 + np.tanh(0.5 * eta))
        return np.column_stack([1.0 - p1, p1])
    P = np.exp(eta - np.logaddexp.reduce(eta, axis=1)[:, None])
    out = np.zeros((eta.shape[0], probe.n_classes))
    out[:, probe.classes] = P
    return out


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    bounds = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1], True])
    avg = (bounds[:-1] + 1 + bounds[1:]) / 2.0
    ranks = np.empty(len(x))
    ranks[order] = np.repeat(avg, np.diff(bounds))
    return ranks


def roc_auc(scores: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray) -> float:
    """Area under the ROC curve via the Mann-Whitney rank sum; ties count one half."""
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(labels)
    if s.shape != t.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-D and of equal length")
    if np.any(np.isnan(s)):
        raise ValueError("scores contain NaN")
    if not np.all((t == 0) | (t == 1)):
        raise ValueError("labels must be binary 0/1")
    pos = t == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("ROC AUC needs both classes")
    ranks = _average_ranks(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def r2(pred: Sequence[float] | np.ndarray, truth: Sequence[float] | np.ndarray) -> float:
    """Coefficient of determination; unbounded below."""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape or len(t) < 2:
        raise ValueError("pred and truth must have equal length >= 2")
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("R2 is undefined for constant truth")
    return 1.0 - float(np.sum((t - p) ** 2)) / ss_tot


# ---------------------------------------------------------------------------
# Batch probing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitPlan:
    """How ``run_linear_probing`` splits each joined dataset.

    ``test_ids`` switches to an externally supplied split (e.g. scaffold).
    """

    test_frac: float = 0.2
    seed: int = 0
    stratified: bool = False
    test_ids: frozenset[str] | None = None


@dataclass(frozen=True)
class ReportRow:
    property: str
    metric: str
    value: float | None
    n_train: int
    n_test: int
    converged: bool | None
    reason: str = ""

    FIELDS = ("property", "metric", "value", "n_train", "n_test", "converged", "reason")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


def _metric_for(kind) -> str:
    return "auc" if kind.is_discrete_class else "r2"


def _macro_auc(P: np.ndarray, y: np.ndarray) -> float | None:
    aucs = []
    for c in range(P.shape[1]):
        t = (y == c).astype(int)
        if 0 < t.sum() < len(t):
            aucs.append(roc_auc(P[:, c], t))
    return float(np.mean(aucs)) if aucs else None


def _probe_one(emb: EmbeddingTable, labels: LabelTable, prop: str, plan: SplitPlan, opts: FitOptions) -> ReportRow:
    kind = labels.kinds[prop]
    metric = _metric_for(kind)

    def na(reason, n_train=0, n_test=0, converged=None):
        return ReportRow(prop, metric, None, n_train, n_test, converged, reason)

    try:
        ds = join(emb, labels, prop)
    except EmptyJoinError:
        return na("no-overlap")
    if ds.n == 0:
        return na("no-labels")
    if ds.n < 2:
        return na("too-few-samples")
    if kind.is_discrete_class and len(np.unique(ds.p)) < 2:
        return na("single-class")

    try:
        if plan.test_ids is not None:
            split = split_from_ids(ds.ids, plan.test_ids)
        elif plan.stratified and kind.is_discrete_class:
            split = split_stratified(ds.p, plan.test_frac, plan.seed)
        else:
            split = split_random(ds.n, plan.test_frac, plan.seed)
    except ValueError as exc:
        return na(f"split-failed: {exc}")
    tr, te = ds.take(split.train_idx), ds.take(split.test_idx)
    n_tr, n_te = tr.n, te.n
    if n_tr < 2:
        return na("too-few-train", n_tr, n_te)

    try:
        if kind.is_discrete_class:
            if len(np.unique(tr.p)) < 2:
                return na("single-class-train", n_tr, n_te)
            probe = fit_logistic(tr.Z, tr.p, opts, n_classes=kind.classes)
            P = predict_proba(probe, te.Z)
            if kind.name == "binary":
                if len(np.unique(te.p)) < 2:
                    return na("single-class-test", n_tr, n_te, probe.converged)
                value = roc_auc(P[:, 1], te.p)
            else:
                value = _macro_auc(P, te.p)
                if value is None:
                    return na("single-class-test", n_tr, n_te, probe.converged)
        else:
            if kind.name == "count":
                probe = fit_poisson(tr.Z, tr.p, opts)
            else:
                probe = fit_linear(tr.Z, tr.p, opts.strength("ridge"))
            if np.ptp(te.p) == 0:
                return na("constant-truth", n_tr, n_te, probe.converged)
            pred = predict(probe, te.Z)
            if not np.all(np.isfinite(pred)):
                return na("diverged", n_tr, n_te, False)
            value = r2(pred, te.p)
    except (ValueError, np.linalg.LinAlgError) as exc:
        return na(f"fit-failed: {exc}", n_tr, n_te)
    return ReportRow(prop, metric, float(value), n_tr, n_te, bool(probe.converged), "")


def run_linear_probing(emb: EmbeddingTable, labels: LabelTable, properties: Sequence[str] | None = None,
                       split: SplitPlan | None = None, opts: FitOptions | None = None) -> list[ReportRow]:
    """Fit the kind-appropriate probe per property and score it on held-out rows.

    Binary and categorical properties report ROC AUC (macro one-vs-rest for
    categorical), counts and continuous properties report R2. Failures
    produce a row with ``value=None`` and a reason instead of raising.
    """
    split = split or SplitPlan()
    opts = opts or FitOptions()
    properties = list(properties) if properties is not None else labels.properties
    rows = []
    for prop in properties:
        if prop not in labels.columns:
            rows.append(ReportRow(prop, "", None, 0, 0, None, "unknown-property"))
            continue
        rows.append(_probe_one(emb, labels, prop, split, opts))
    return rows
