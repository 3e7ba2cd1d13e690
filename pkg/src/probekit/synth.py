"""Synthetic representation/label families with known ground truth.

Each mechanism plants a property along a unit signal direction ``u`` (or
plants nothing) so estimators can be checked against values known by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from probekit.core import EmbeddingTable, Kind, LabelTable, RunMeta
from probekit.pairwise import PairEmbeddings

__all__ = ["MECHANISMS", "COUNT_RATE", "COUNT_SIGNAL_SD", "PROPERTY", "SynthSpec", "signal_direction", "gen", "true_count_intercept"]

MECHANISMS = ("linear_binary", "linear_count", "linear_continuous", "one_hot", "independent", "paired")
COUNT_RATE = 3.0
COUNT_SIGNAL_SD = 1.25
PROPERTY = "p"


@dataclass(frozen=True)
class SynthSpec:
    mechanism: str
    n: int
    d: int
    noise_sigma: float = 0.1
    seed: int = 0
    signal_dir: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}; choose from {', '.join(MECHANISMS)}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.mechanism == "one_hot" and self.d < 2:
            raise ValueError("one_hot needs d >= 2 (one dimension per class)")
        if self.signal_dir is not None:
            u = np.asarray(self.signal_dir, dtype=np.float64)
            if u.shape != (self.d,):
                raise ValueError(f"signal_dir must have length {self.d}")
            if abs(np.linalg.norm(u) - 1.0) > 1e-9:
                raise ValueError("signal_dir must be unit-norm")


def signal_direction(spec: SynthSpec) -> np.ndarray:
    """The unit vector ``u`` the mechanism uses (a seeded random direction unless given)."""
    if spec.signal_dir is not None:
        return np.asarray(spec.signal_dir, dtype=np.float64)
    g = np.random.default_rng([spec.seed, 1]).normal(size=spec.d)
    return g / np.linalg.norm(g)


def _ids(n: int, prefix: str = "s") -> tuple[str, ...]:
    w = len(str(n - 1))
    return tuple(f"{prefix}{i:0{w}d}" for i in range(n))


def _orth(G: np.ndarray, u: np.ndarray) -> np.ndarray:
    return G - np.outer(G @ u, u)


def gen(spec: SynthSpec):
    """Sample a dataset: ``(EmbeddingTable, LabelTable)``, or ``PairEmbeddings`` for ``paired``.

    Mechanisms (``g``, ``e`` standard Gaussians, ``sigma`` the noise level):

    * ``linear_binary``: ``p ~ Bernoulli(1/2)``, ``z = p*u + sigma*g``.
    * ``linear_count``: ``s ~ N(0, 1.25^2)``, ``p ~ Poisson(3*exp(s))``,
      ``z = s*u + (I - uu^T) g + sigma*e``. The true log-rate is
      ``u.z + ln 3`` up to the noise on the ``u`` axis.
    * ``linear_continuous``: ``z = g``, ``p = u.z + sigma*e``.
    * ``one_hot``: ``p`` uniform over ``d`` classes, ``z = e_p + sigma*g``.
    * ``independent``: ``z = g``, ``p ~ Bernoulli(1/2)`` independent of ``z``.
    * ``paired``: ``z = (I - uu^T) g + u/2``, ``z' = z - u + sigma*e``; the
      two clouds sit on either side of the hyperplane normal to ``u``.
    """
    rng = np.random.default_rng([spec.seed, 0])
    n, d, sigma = spec.n, spec.d, spec.noise_sigma
    u = signal_direction(spec)
    mech = spec.mechanism
    meta = RunMeta(f"synth-{mech}", 0, 0)

    if mech == "paired":
        Z = _orth(rng.normal(size=(n, d)), u) + 0.5 * u
        Zp = Z - u + sigma * rng.normal(size=(n, d))
        src = _ids(n)
        return PairEmbeddings(Z, Zp, "synth", src, tuple(f"{s}_no_synth" for s in src))

    kind = Kind("binary")
    if mech == "linear_binary":
        p = rng.integers(0, 2, size=n).astype(np.float64)
        Z = np.outer(p, u) + sigma * rng.normal(size=(n, d))
    elif mech == "linear_count":
        s = COUNT_SIGNAL_SD * rng.normal(size=n)
        p = rng.poisson(COUNT_RATE * np.exp(s)).astype(np.float64)
        Z = np.outer(s, u) + _orth(rng.normal(size=(n, d)), u) + sigma * rng.normal(size=(n, d))
        kind = Kind("count")
    elif mech == "linear_continuous":
        Z = rng.normal(size=(n, d))
        p = Z @ u + sigma * rng.normal(size=n)
        kind = Kind("continuous")
    elif mech == "one_hot":
        p = rng.integers(0, d, size=n).astype(np.float64)
        Z = np.eye(d)[p.astype(np.int64)] + sigma * rng.normal(size=(n, d))
        kind = Kind("binary") if d == 2 else Kind("categorical", d)
    else:  # independent
        Z = rng.normal(size=(n, d))
        p = rng.integers(0, 2, size=n).astype(np.float64)

    ids = _ids(n)
    return EmbeddingTable(ids, Z, meta), LabelTable(ids, {PROPERTY: p}, {PROPERTY: kind})


def true_count_intercept() -> float:
    return math.log(COUNT_RATE)
