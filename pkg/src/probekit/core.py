"""Data model, file ingestion, joining, splitting and standardization.

Everything downstream (probes, BMI curves, pairwise analysis) consumes the
types defined here. Tables are immutable once built; every randomized
operation takes an explicit seed and is a pure function of its inputs.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "EmbeddingParseError",
    "HeaderError",
    "NonNumericError",
    "DuplicateIdError",
    "NonFiniteError",
    "LabelParseError",
    "EmptyJoinError",
    "Kind",
    "RunMeta",
    "EmbeddingTable",
    "LabelTable",
    "ProbingDataset",
    "Split",
    "Standardizer",
    "load_embeddings",
    "save_embeddings",
    "load_labels",
    "save_labels",
    "sidecar_path",
    "schema_path_for",
    "join",
    "split_random",
    "split_stratified",
    "split_from_ids",
    "fit_standardizer",
    "apply_standardizer",
    "subsample",
]


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class EmbeddingParseError(ValueError):
    """Raised when an embedding file cannot be read.

    ``row`` is the 1-based data row (0 for the header), ``column`` the
    0-based column, either may be ``None`` when not applicable.
    """

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.column = column


class HeaderError(EmbeddingParseError):
    pass


class NonNumericError(EmbeddingParseError):
    pass


class DuplicateIdError(EmbeddingParseError):
    pass


class NonFiniteError(EmbeddingParseError):
    pass


class LabelParseError(ValueError):
    pass


class EmptyJoinError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Kind:
    """Property kind: ``binary``, ``categorical`` (with ``n_classes``), ``count`` or ``continuous``."""

    name: str
    n_classes: int | None = None

    def __post_init__(self):
        if self.name not in ("binary", "categorical", "count", "continuous"):
            raise ValueError(f"unknown property kind {self.name!r}")
        if self.name == "categorical" and (self.n_classes is None or self.n_classes < 2):
            raise ValueError("categorical kind needs n_classes >= 2")
        if self.name == "binary" and self.n_classes not in (None, 2):
            raise ValueError("binary kind has exactly two classes")

    @classmethod
    def parse(cls, text: str) -> "Kind":
        text = text.strip()
        if text.startswith("categorical"):
            _, _, c = text.partition(":")
            if not c:
                raise ValueError("categorical kind must be written 'categorical:<C>'")
            return cls("categorical", int(c))
        return cls(text)

    def __str__(self) -> str:
        if self.name == "categorical":
            return f"categorical:{self.n_classes}"
        return self.name

    @property
    def is_discrete_class(self) -> bool:
        return self.name in ("binary", "categorical")

    @property
    def classes(self) -> int | None:
        if self.name == "binary":
            return 2
        return self.n_classes

    def validate(self, values: np.ndarray, where: str = "") -> None:
        """Check non-missing entries against the kind's domain."""
        v = values[~np.isnan(values)]
        if self.name == "continuous":
            if not np.all(np.isfinite(v)):
                raise LabelParseError(f"{where}: continuous values must be finite")
            return
        if not np.all(v == np.round(v)):
            raise LabelParseError(f"{where}: {self} values must be integers")
        if np.any(v < 0):
            raise LabelParseError(f"{where}: {self} values must be >= 0")
        top = self.classes
        if top is not None and np.any(v >= top):
            raise LabelParseError(f"{where}: {self} values must be < {top}")


@dataclass(frozen=True)
class RunMeta:
    model: str
    epoch: int = 0
    layer: int = 0

    def to_json(self) -> dict:
        return {"model": self.model, "epoch": self.epoch, "layer": self.layer}

    @classmethod
    def from_json(cls, obj: Mapping) -> "RunMeta":
        epoch, layer = int(obj.get("epoch", 0)), int(obj.get("layer", 0))
        if epoch < 0 or layer < 0:
            raise ValueError("epoch and layer must be >= 0")
        return cls(str(obj.get("model", obj.get("model_name", ""))), epoch, layer)


@dataclass(frozen=True)
class EmbeddingTable:
    ids: tuple[str, ...]
    matrix: np.ndarray
    meta: RunMeta | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("embedding matrix must be 2-D")
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != m.shape[0]:
            raise ValueError(f"{len(ids)} ids for {m.shape[0]} rows")
        if m.shape[1] < 1:
            raise ValueError("embedding dimension must be >= 1")
        if len(set(ids)) != len(ids):
            raise DuplicateIdError("duplicate sample id in embedding table")
        if not np.all(np.isfinite(m)):
            raise NonFiniteError("embedding matrix contains NaN or Inf")
        m.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    def index(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.ids)}

    def rows(self, ids: Sequence[str]) -> np.ndarray:
        idx = self.index()
        return self.matrix[[idx[i] for i in ids]]


@dataclass(frozen=True)
class LabelTable:
    """Per-sample labels. Missing cells are stored as NaN."""

    ids: tuple[str, ...]
    columns: Mapping[str, np.ndarray]
    kinds: Mapping[str, Kind]

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        if len(set(ids)) != len(ids):
            raise LabelParseError("duplicate sample id in label table")
        cols = {}
        for name, values in self.columns.items():
            if name not in self.kinds:
                raise LabelParseError(f"no kind declared for property {name!r}")
            v = np.array(values, dtype=np.float64)
            if v.shape != (len(ids),):
                raise LabelParseError(f"column {name!r} has wrong length")
            self.kinds[name].validate(v, where=name)
            v.setflags(write=False)
            cols[name] = v
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "kinds", {k: self.kinds[k] for k in cols})

    @property
    def properties(self) -> list[str]:
        return list(self.columns)


@dataclass(frozen=True)
class ProbingDataset:
    Z: np.ndarray
    p: np.ndarray
    kind: Kind
    ids: tuple[str, ...]
    dropped: int = 0

    def __post_init__(self):
        if self.Z.shape[0] != len(self.p) or len(self.ids) != len(self.p):
            raise ValueError("Z, p and ids must have the same length")
        if np.any(np.isnan(self.p)):
            raise ValueError("probing dataset may not contain missing labels")

    @property
    def n(self) -> int:
        return len(self.p)

    def take(self, idx: Sequence[int] | np.ndarray) -> "ProbingDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return ProbingDataset(self.Z[idx], self.p[idx], self.kind, tuple(self.ids[i] for i in idx))


@dataclass(frozen=True)
class Split:
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        tr = np.asarray(self.train_idx, dtype=np.int64)
        te = np.asarray(self.test_idx, dtype=np.int64)
        if tr.size == 0 or te.size == 0:
            raise ValueError("both sides of a split must be non-empty")
        if np.intersect1d(tr, te).size:
            raise ValueError("train and test indices overlap")
        object.__setattr__(self, "train_idx", tr)
        object.__setattr__(self, "test_idx", te)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        if np.any(self.scale <= 0):
            raise ValueError("standardizer scale must be positive")

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------


def sidecar_path(path: str | Path) -> Path:
    """Descriptor JSON living next to an embedding file (``emb.f32`` -> ``emb.f32.json``)."""
    path = Path(path)
    return path.with_name(path.name + ".json")


def _infer_format(path: Path) -> str:
    return "csv" if path.suffix.lower() in (".csv", ".txt") else "f32"


def load_embeddings(path: str | Path, format: str | None = None) -> EmbeddingTable:
    """Read an embedding table from CSV (``id,e0,e1,...``) or little-endian float32 binary.

    The binary format requires the sidecar descriptor ``<path>.json`` with
    ``n``, ``d``, ``ids`` and optional ``meta``. For CSV the sidecar is
    optional and only contributes ``meta``.
    """
    path = Path(path)
    fmt = format or _infer_format(path)
    side = sidecar_path(path)
    descriptor = json.loads(side.read_text(encoding="utf-8")) if side.exists() else None
    meta = RunMeta.from_json(descriptor["meta"]) if descriptor and descriptor.get("meta") else None

    if fmt == "csv":
        ids, matrix = _read_embedding_csv(path)
    elif fmt in ("f32", "f32-binary", "bin"):
        if descriptor is None:
            raise HeaderError(f"binary embeddings need a sidecar descriptor {side}")
        ids, matrix = _read_embedding_f32(path, descriptor)
    else:
        raise ValueError(f"unknown embedding format {fmt!r}")
    return EmbeddingTable(ids, matrix, meta)


def _read_embedding_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise HeaderError("missing header", row=0)
        if header[0] != "id":
            raise HeaderError("first header column must be 'id'", row=0, column=0)
        d = len(header) - 1
        if d < 1:
            raise HeaderError("header declares no embedding columns", row=0)
        for j, name in enumerate(header[1:], start=1):
            if name != f"e{j - 1}":
                raise HeaderError(f"expected header 'e{j - 1}', got {name!r}", row=0, column=j)

        ids: list[str] = []
        seen: set[str] = set()
        rows: list[list[float]] = []
        for r, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != d + 1:
                raise HeaderError(f"expected {d + 1} fields, got {len(rec)}", row=r)
            key = rec[0]
            if key in seen:
                raise DuplicateIdError(f"duplicate id {key!r}", row=r, column=0)
            seen.add(key)
            vals = []
            for j, cell in enumerate(rec[1:], start=1):
                try:
                    x = float(cell)
                except ValueError:
                    raise NonNumericError(f"non-numeric cell {cell!r}", row=r, column=j) from None
                if not math.isfinite(x):
                    raise NonFiniteError(f"non-finite value {cell!r}", row=r, column=j)
                vals.append(x)
            ids.append(key)
            rows.append(vals)
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), d)
    return ids, matrix


def _read_embedding_f32(path: Path, desc: Mapping) -> tuple[list[str], np.ndarray]:
    try:
        n, d, ids = int(desc["n"]), int(desc["d"]), [str(i) for i in desc["ids"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise HeaderError(f"bad sidecar descriptor: {exc}") from None
    if len(ids) != n:
        raise HeaderError(f"descriptor lists {len(ids)} ids for n={n}")
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != n * d:
        raise HeaderError(f"binary holds {raw.size} floats, descriptor says {n}x{d}")
    matrix = raw.reshape(n, d).astype(np.float64)
    seen: set[str] = set()
    for r, key in enumerate(ids, start=1):
        if key in seen:
            raise DuplicateIdError(f"duplicate id {key!r}", row=r, column=0)
        seen.add(key)
    bad = np.argwhere(~np.isfinite(matrix))
    if bad.size:
        r, c = bad[0]
        raise NonFiniteError("non-finite value", row=int(r) + 1, column=int(c) + 1)
    return ids, matrix


def save_embeddings(table: EmbeddingTable, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = format or _infer_format(path)
    side = sidecar_path(path)
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id"] + [f"e{j}" for j in range(table.d)])
            for key, row in zip(table.ids, table.matrix):
                w.writerow([key] + [repr(float(x)) for x in row])
        if table.meta is not None:
            side.write_text(json.dumps({"meta": table.meta.to_json()}, sort_keys=True) + "\n", encoding="utf-8")
    else:
        table.matrix.astype("<f4").tofile(path)
        desc = {"n": table.n, "d": table.d, "ids": list(table.ids)}
        if table.meta is not None:
            desc["meta"] = table.meta.to_json()
        side.write_text(json.dumps(desc, sort_keys=True) + "\n", encoding="utf-8")


def schema_path_for(labels_path: str | Path) -> Path:
    """``labels.csv`` -> ``labels.schema.json``."""
    p = Path(labels_path)
    return p.with_name(p.stem + ".schema.json")


def load_labels(path: str | Path, schema: str | Path | Mapping | None = None) -> LabelTable:
    """Read a label CSV (``id,<prop>,...``); empty cells are missing.

    ``schema`` is a mapping or JSON file of ``{prop: kind}``; defaults to
    the sibling ``<stem>.schema.json``.
    """
    path = Path(path)
    if schema is None:
        schema = schema_path_for(path)
    if not isinstance(schema, Mapping):
        schema = json.loads(Path(schema).read_text(encoding="utf-8"))
    kinds = {k: Kind.parse(v) for k, v in schema.items()}

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "id":
            raise LabelParseError("label CSV must start with an 'id' column")
        props = header[1:]
        missing = [p for p in props if p not in kinds]
        if missing:
            raise LabelParseError(f"no kind declared in schema for: {', '.join(missing)}")
        ids = []
        values: list[list[float]] = []
        for r, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != len(header):
                raise LabelParseError(f"row {r}: expected {len(header)} fields")
            ids.append(rec[0])
            row = []
            for j, cell in enumerate(rec[1:], start=1):
                cell = cell.strip()
                if cell == "":
                    row.append(math.nan)
                    continue
                try:
                    row.append(float(cell))
                except ValueError:
                    raise LabelParseError(f"row {r}, column {j}: non-numeric label {cell!r}") from None
            values.append(row)
    arr = np.array(values, dtype=np.float64).reshape(len(ids), len(props))
    return LabelTable(ids, {p: arr[:, j] for j, p in enumerate(props)}, {p: kinds[p] for p in props})


def _fmt_label(x: float, kind: Kind) -> str:
    if math.isnan(x):
        return ""
    if kind.name == "continuous":
        return repr(float(x))
    return str(int(x))


def save_labels(table: LabelTable, path: str | Path, schema: str | Path | None = None) -> Path:
    """Write the label CSV plus its schema JSON; returns the schema path."""
    path = Path(path)
    props = table.properties
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + props)
        for i, key in enumerate(table.ids):
            w.writerow([key] + [_fmt_label(table.columns[p][i], table.kinds[p]) for p in props])
    schema = Path(schema) if schema is not None else schema_path_for(path)
    schema.write_text(json.dumps({p: str(table.kinds[p]) for p in props}, indent=2) + "\n", encoding="utf-8")
    return schema


# ---------------------------------------------------------------------------
# Joining
# ---------------------------------------------------------------------------


def join(emb: EmbeddingTable, labels: LabelTable, prop: str) -> ProbingDataset:
    """Inner-join embeddings and one label column on sample id.

    Rows keep embedding-file order. Rows present in both tables but with
    a missing label are dropped and counted in ``dropped``.
    """
    if prop not in labels.columns:
        raise KeyError(f"property {prop!r} not in label table")
    col = labels.columns[prop]
    lab_idx = {k: i for i, k in enumerate(labels.ids)}
    keep_rows, keep_vals, keep_ids = [], [], []
    dropped = 0
    for r, key in enumerate(emb.ids):
        j = lab_idx.get(key)
        if j is None:
            continue
        if math.isnan(col[j]):
            dropped += 1
            continue
        keep_rows.append(r)
        keep_vals.append(col[j])
        keep_ids.append(key)
    if not keep_rows and not dropped:
        raise EmptyJoinError("embedding and label tables share no sample ids")
    Z = emb.matrix[keep_rows] if keep_rows else np.empty((0, emb.d))
    return ProbingDataset(Z, np.array(keep_vals, dtype=np.float64), labels.kinds[prop], tuple(keep_ids), dropped)


# ---------------------------------------------------------------------------
# Splitting and subsampling
# ---------------------------------------------------------------------------


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_random(n: int, test_frac: float, seed: int = 0) -> Split:
    if n < 2:
        raise ValueError(f"cannot split {n} rows; need at least 2")
    if not 0.0 < test_frac < 1.0:
        raise ValueError("test_frac must lie in (0, 1)")
    n_test = min(max(_round_half_up(n * test_frac), 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return Split(np.sort(perm[n_test:]), np.sort(perm[:n_test]), seed)


def split_stratified(p: Sequence[float] | np.ndarray, test_frac: float, seed: int = 0) -> Split:
    """Per-class shuffle-and-cut so each class is represented in both sides.

    Each class contributes ``round(n_c * test_frac)`` test rows, clamped to
    ``[1, n_c - 1]``.
    """
    p = np.asarray(p)
    if not 0.0 < test_frac < 1.0:
        raise ValueError("test_frac must lie in (0, 1)")
    classes, counts = np.unique(p, return_counts=True)
    if len(classes) == 1:
        warnings.warn("stratified split on a single class; falling back to a random split", stacklevel=2)
        return split_random(len(p), test_frac, seed)
    for c, k in zip(classes, counts):
        if k < 2:
            raise ValueError(f"class {c:g} has a single member; cannot stratify")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c, k in zip(classes, counts):
        members = np.flatnonzero(p == c)
        members = members[rng.permutation(k)]
        t = min(max(_round_half_up(k * test_frac), 1), k - 1)
        test.append(members[:t])
        train.append(members[t:])
    return Split(np.sort(np.concatenate(train)), np.sort(np.concatenate(test)), seed)


def split_from_ids(ids: Sequence[str], test_ids: Iterable[str]) -> Split:
    """Split built from an externally supplied test-id list (e.g. a scaffold split)."""
    test_ids = set(test_ids)
    mask = np.array([i in test_ids for i in ids], dtype=bool)
    return Split(np.flatnonzero(~mask), np.flatnonzero(mask))


def _allocate(counts: np.ndarray, m: int) -> np.ndarray:
    # Largest-remainder allocation of m draws over classes, at least one each.
    share = counts * m / counts.sum()
    alloc = np.floor(share).astype(np.int64)
    rest = m - alloc.sum()
    order = np.lexsort((np.arange(len(counts)), -(share - alloc)))
    alloc[order[:rest]] += 1
    for c in np.flatnonzero(alloc == 0):
        donor = int(np.argmax(alloc))
        alloc[donor] -= 1
        alloc[c] += 1
    return np.minimum(alloc, counts)


def subsample(dataset: ProbingDataset, m: int, seed: int = 0) -> ProbingDataset:
    """Draw ``m`` rows without replacement; original row order is preserved.

    Class-stratified for binary/categorical labels when every class can
    contribute at least one row.
    """
    n = dataset.n
    if m > n:
        raise ValueError(f"cannot subsample {m} rows from {n}")
    if m < 1:
        raise ValueError("subsample size must be >= 1")
    if m == n:
        return dataset.take(np.arange(n))
    rng = np.random.default_rng(seed)
    classes, counts = np.unique(dataset.p, return_counts=True)
    if dataset.kind.is_discrete_class and len(classes) > 1 and m >= len(classes):
        alloc = _allocate(counts, m)
        # allocation capped by class size can undershoot m; top up from the largest classes
        short = m - int(alloc.sum())
        for c in np.argsort(-(counts - alloc), kind="stable"):
            if short == 0:
                break
            extra = min(short, int(counts[c] - alloc[c]))
            alloc[c] += extra
            short -= extra
        picked = []
        for c, k in zip(classes, alloc):
            members = np.flatnonzero(dataset.p == c)
            picked.append(rng.choice(members, size=int(k), replace=False))
        idx = np.sort(np.concatenate(picked))
    else:
        idx = np.sort(rng.choice(n, size=m, replace=False))
    return dataset.take(idx)


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------


def fit_standardizer(Z_train: np.ndarray) -> Standardizer:
    """Per-feature mean and population standard deviation; constant columns get scale 1."""
    Z = np.asarray(Z_train, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise ValueError("standardizer needs at least 2 rows")
    mean = Z.mean(axis=0)
    std = Z.std(axis=0)
    # float noise on a constant column is not a real spread
    const = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    scale = np.where(const, 1.0, std)
    return Standardizer(mean, scale)


def apply_standardizer(S: Standardizer, Z: np.ndarray) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape[-1] != S.mean.shape[0]:
        raise ValueError(f"expected {S.mean.shape[0]} features, got {Z.shape[-1]}")
    return (Z - S.mean) / S.scale
