"""Geometry of paired representations (a molecule and its group-removed twin).

Difference vectors, their cosine alignment, midpoint-centred PCA, the
average treatment effect, a pair-level linear probe and the effect of the
intervention on downstream probe predictions. The node-feature
oversmoothing metric and Pearson correlation live here as well.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from probekit.core import EmbeddingTable, split_random
from probekit.probes import FitOptions, LinearProbe, fit_logistic, predict, predict_proba, roc_auc

__all__ = [
    "PairEmbeddings",
    "CosineStats",
    "PcaResult",
    "AteResult",
    "PairProbeResult",
    "EffectMatrix",
    "PairwiseReport",
    "pair_embeddings_from_tables",
    "diff_vectors",
    "pairwise_cosine_stats",
    "center_pairs",
    "pca",
    "ate",
    "pairwise_linear_probe",
    "causal_effect_matrix",
    "analyze_pairs",
    "oversmoothing_metric",
    "correlation",
]

MAX_COSINE_PAIRS = 1_000_000
N_BINS = 40


@dataclass(frozen=True)
class PairEmbeddings:
    """Row-aligned source (``Z``) and target (``Zp``) representations."""

    Z: np.ndarray
    Zp: np.ndarray
    group: str = ""
    source_ids: tuple[str, ...] | None = None
    target_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=np.float64)
        Zp = np.asarray(self.Zp, dtype=np.float64)
        if Z.ndim != 2 or Z.shape != Zp.shape:
            raise ValueError(f"source and target matrices must share a 2-D shape, got {Z.shape} and {Zp.shape}")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "Zp", Zp)

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def d(self) -> int:
        return self.Z.shape[1]

    def take(self, idx) -> "PairEmbeddings":
        idx = np.asarray(idx, dtype=np.int64)
        pick = lambda ids: tuple(ids[i] for i in idx) if ids is not None else None
        return PairEmbeddings(self.Z[idx], self.Zp[idx], self.group, pick(self.source_ids), pick(self.target_ids))


def pair_embeddings_from_tables(src: EmbeddingTable, tgt: EmbeddingTable, pairs: Sequence[tuple[str, str]],
                                group: str = "") -> tuple[PairEmbeddings, list[tuple[str, str]]]:
    """Look up each ``(source_id, target_id)``; pairs with a missing side are returned separately."""
    si, ti = src.index(), tgt.index()
    ok = [(s, t) for s, t in pairs if s in si and t in ti]
    missing = [(s, t) for s, t in pairs if s not in si or t not in ti]
    Z = src.matrix[[si[s] for s, _ in ok]] if ok else np.empty((0, src.d))
    Zp = tgt.matrix[[ti[t] for _, t in ok]] if ok else np.empty((0, tgt.d))
    return PairEmbeddings(Z, Zp, group, tuple(s for s, _ in ok), tuple(t for _, t in ok)), missing


def diff_vectors(pe: PairEmbeddings) -> np.ndarray:
    return pe.Z - pe.Zp


# ---------------------------------------------------------------------------
# Cosine alignment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CosineStats:
    mean: float
    counts: np.ndarray
    edges: np.ndarray
    n_pairs: int
    sampled: bool
    n_zero: int

    def histogram_rows(self):
        return [(float(self.edges[k]), float(self.edges[k + 1]), int(self.counts[k])) for k in range(len(self.counts))]


def _unit_rows(V: np.ndarray) -> tuple[np.ndarray, int]:
    norms = np.linalg.norm(V, axis=1)
    nz = norms > 0
    return V[nz] / norms[nz, None], int((~nz).sum())


def pairwise_cosine_stats(V: np.ndarray, max_pairs: int | None = MAX_COSINE_PAIRS, seed: int = 0,
                          bins: int = N_BINS) -> CosineStats:
    """Mean and histogram of cosine similarity over all ``i < j`` row pairs.

    Zero rows are excluded and counted. When there are more than
    ``max_pairs`` pairs, a seeded uniform sample of that many is used.
    """
    V = np.asarray(V, dtype=np.float64)
    U, n_zero = _unit_rows(V)
    n = U.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 nonzero difference vectors, got {n}")
    total = n * (n - 1) // 2
    if max_pairs is not None and total > max_pairs:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, size=max_pairs)
        j = rng.integers(0, n - 1, size=max_pairs)
        j = j + (j >= i)
        cos = np.einsum("ij,ij->i", U[i], U[j])
        sampled = True
    else:
        iu, ju = np.triu_indices(n, k=1)
        cos = (U @ U.T)[iu, ju]
        sampled = False
    cos = np.clip(cos, -1.0, 1.0)
    counts, edges = np.histogram(cos, bins=bins, range=(-1.0, 1.0))
    return CosineStats(float(cos.mean()), counts, edges, int(cos.size), sampled, n_zero)


# ---------------------------------------------------------------------------
# Centering and PCA
# ---------------------------------------------------------------------------


def center_pairs(pe: PairEmbeddings) -> np.ndarray:
    """Translate each pair so its midpoint is the origin; sources stacked above targets."""
    half = (pe.Z - pe.Zp) / 2.0
    return np.vstack([half, -half])


@dataclass(frozen=True)
class PcaResult:
    components: np.ndarray  # (k, d), rows orthonormal
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    projections: np.ndarray  # (m, k)
    mean: np.ndarray


def pca(X: np.ndarray, k: int | None = None) -> PcaResult:
    """PCA by symmetric eigendecomposition of the sample covariance.

    Ratios are taken against the full trace. Each component is signed so
    its largest-magnitude coordinate is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("pca needs a 2-D matrix with at least 2 rows")
    m, d = X.shape
    k = min(m, d) if k is None else int(k)
    if not 1 <= k <= min(m, d):
        raise ValueError(f"k must lie in [1, {min(m, d)}], got {k}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (m - 1)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals[::-1], 0.0, None)
    evecs = evecs[:, ::-1]
    trace = evals.sum()
    if trace <= 0:
        raise ValueError("data has zero variance; explained-variance ratios are undefined")
    comps = evecs[:, :k].T.copy()
    for r in range(k):
        if comps[r, np.argmax(np.abs(comps[r]))] < 0:
            comps[r] = -comps[r]
    return PcaResult(comps, evals[:k].copy(), evals[:k] / trace, Xc @ comps.T, mean)


# ---------------------------------------------------------------------------
# Average treatment effect and probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AteResult:
    v_ate: np.ndarray
    c_ate_pair: float | None  # None when v_ate is the zero vector
    n_zero: int = 0


def ate(pe: PairEmbeddings) -> AteResult:
    """Mean difference vector and the mean cosine between it and each difference vector."""
    if pe.n < 1:
        raise ValueError("ate needs at least one pair")
    V = diff_vectors(pe)
    v = V.mean(axis=0)
    nv = np.linalg.norm(v)
    U, n_zero = _unit_rows(V)
    if nv == 0 or U.shape[0] == 0:
        return AteResult(v, None, n_zero)
    c = float(np.clip(U @ (v / nv), -1.0, 1.0).mean())
    return AteResult(v, c, n_zero)


@dataclass(frozen=True)
class PairProbeResult:
    auc: float
    n_train_pairs: int
    n_test_pairs: int
    converged: bool


def pairwise_linear_probe(pe: PairEmbeddings, test_frac: float = 0.2, seed: int = 0,
                          opts: FitOptions | None = None) -> PairProbeResult:
    """Sources vs targets logistic probe; pairs, not rows, are split so twins stay together."""
    if pe.n < 2:
        raise ValueError("pairwise probe needs at least 2 pairs")
    split = split_random(pe.n, test_frac, seed)
    tr, te = pe.take(split.train_idx), pe.take(split.test_idx)
    X = np.vstack([tr.Z, tr.Zp])
    y = np.r_[np.ones(tr.n), np.zeros(tr.n)]
    probe = fit_logistic(X, y, opts)
    scores = predict_proba(probe, np.vstack([te.Z, te.Zp]))[:, 1]
    auc = roc_auc(scores, np.r_[np.ones(te.n, dtype=int), np.zeros(te.n, dtype=int)])
    return PairProbeResult(auc, tr.n, te.n, probe.converged)


def _response(probe: LinearProbe, Z: np.ndarray) -> np.ndarray:
    if probe.link == "logit":
        if probe.multiclass:
            raise ValueError("causal effects need a binary logistic, ridge or Poisson probe")
        return predict_proba(probe, Z)[:, 1]
    return predict(probe, Z)


@dataclass(frozen=True)
class EffectMatrix:
    groups: tuple[str, ...]
    properties: tuple[str, ...]
    raw: np.ndarray  # (groups, properties)
    centered: np.ndarray
    omitted: tuple[tuple[str, str], ...] = ()

    def rows(self):
        for gi, g in enumerate(self.groups):
            for pj, p in enumerate(self.properties):
                yield g, p, float(self.raw[gi, pj]), float(self.centered[gi, pj])


def causal_effect_matrix(probes: Mapping[str, LinearProbe], pairs_by_group: Mapping[str, PairEmbeddings]) -> EffectMatrix:
    """Mean change in each probe's prediction when a group is removed, centred across groups.

    Column centring removes the effect common to removing any group.
    Groups without pairs are omitted with a reason.
    """
    props = tuple(probes)
    groups, rows, omitted = [], [], []
    for g, pe in pairs_by_group.items():
        if pe.n == 0:
            omitted.append((g, "no pairs"))
            continue
        row = []
        for p in props:
            probe = probes[p]
            if probe.d != pe.d:
                raise ValueError(f"probe {p!r} expects dimension {probe.d}, pairs for {g!r} have {pe.d}")
            row.append(float(np.mean(_response(probe, pe.Z) - _response(probe, pe.Zp))))
        groups.append(g)
        rows.append(row)
    raw = np.array(rows, dtype=np.float64).reshape(len(groups), len(props))
    centered = raw - raw.mean(axis=0) if len(groups) else raw.copy()
    return EffectMatrix(tuple(groups), props, raw, centered, tuple(omitted))


# ---------------------------------------------------------------------------
# Full report
# ---------------------------------------------------------------------------


def _num(x):
    return None if x is None else float(x)


@dataclass(frozen=True)
class PairwiseReport:
    group: str
    n_pairs: int
    cosine: CosineStats
    ate: AteResult
    pca: PcaResult
    probe: PairProbeResult | None
    notes: tuple[str, ...] = field(default=())

    @property
    def mean_cosine(self) -> float:
        return self.cosine.mean

    @property
    def c_ate_pair(self) -> float | None:
        return self.ate.c_ate_pair

    @property
    def pair_probe_auc(self) -> float | None:
        return self.probe.auc if self.probe is not None else None

    def to_json(self) -> dict:
        return {
            "group": self.group,
            "n_pairs": self.n_pairs,
            "mean_cosine": self.cosine.mean,
            "cosine_pairs": self.cosine.n_pairs,
            "cosine_sampled": self.cosine.sampled,
            "zero_diff_vectors": self.cosine.n_zero,
            "cosine_histogram": [{"bin_left": l, "bin_right": r, "count": c} for l, r, c in self.cosine.histogram_rows()],
            "v_ate": self.ate.v_ate.tolist(),
            "c_ate_pair": _num(self.ate.c_ate_pair),
            "pca": {
                "explained_variance_ratio": self.pca.explained_variance_ratio.tolist(),
                "components": self.pca.components[:2].tolist(),
            },
            "pair_probe_auc": _num(self.pair_probe_auc),
            "pair_probe_converged": self.probe.converged if self.probe is not None else None,
            "notes": list(self.notes),
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def write_projection_csv(self, path: str | Path) -> None:
        P = self.pca.projections
        n = self.n_pairs
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["pc1", "pc2", "role"])
            for r in range(P.shape[0]):
                pc2 = repr(float(P[r, 1])) if P.shape[1] > 1 else ""
                w.writerow([repr(float(P[r, 0])), pc2, "source" if r < n else "target"])

    def write_histogram_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_left", "bin_right", "count"])
            for l, r, c in self.cosine.histogram_rows():
                w.writerow([repr(l), repr(r), c])


def analyze_pairs(pe: PairEmbeddings, max_pairs: int | None = MAX_COSINE_PAIRS, bins: int = N_BINS,
                  test_frac: float = 0.2, seed: int = 0, opts: FitOptions | None = None) -> PairwiseReport:
    """Cosine statistics, ATE, centred PCA and the pair probe for one group."""
    notes = []
    V = diff_vectors(pe)
    cos = pairwise_cosine_stats(V, max_pairs, seed, bins)
    a = ate(pe)
    if a.c_ate_pair is None:
        notes.append("v_ate is zero; c_ate_pair is N/A")
    X = center_pairs(pe)
    pcs = pca(X, min(X.shape))
    probe = None
    try:
        probe = pairwise_linear_probe(pe, test_frac, seed, opts)
    except ValueError as exc:
        notes.append(f"pair probe failed: {exc}")
    if cos.n_zero:
        notes.append(f"{cos.n_zero} pairs have identical source and target representations")
    return PairwiseReport(pe.group, pe.n, cos, a, pcs, probe, tuple(notes))


# ---------------------------------------------------------------------------
# Oversmoothing and correlation
# ---------------------------------------------------------------------------


def oversmoothing_metric(node_embeddings: Sequence[np.ndarray], return_skipped: bool = False):
    """Mean over graphs of the mean pairwise Euclidean distance between node features.

    Single-node graphs are skipped (with a warning); the skipped count is
    returned as well when ``return_skipped`` is set.
    """
    per_graph, skipped = [], 0
    for H in node_embeddings:
        H = np.asarray(H, dtype=np.float64)
        if H.ndim != 2:
            raise ValueError("each graph's node features must be a 2-D matrix")
        if H.shape[0] < 2:
            skipped += 1
            continue
        per_graph.append(float(pdist(H).mean()))
    if skipped:
        warnings.warn(f"{skipped} graph(s) with fewer than 2 nodes skipped", RuntimeWarning, stacklevel=2)
    if not per_graph:
        raise ValueError("no graph with at least 2 nodes")
    value = float(np.mean(per_graph))
    return (value, skipped) if return_skipped else value


def correlation(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D and of equal length")
    if len(x) < 3:
        raise ValueError(f"correlation needs at least 3 points, got {len(x)}")
    xc, yc = x - x.mean(), y - y.mean()
    sx, sy = math.sqrt(float(xc @ xc)), math.sqrt(float(yc @ yc))
    if sx == 0 or sy == 0:
        raise ValueError("correlation is undefined for constant input")
    return float(np.clip((xc @ yc) / (sx * sy), -1.0, 1.0))
