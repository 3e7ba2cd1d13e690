"""``probekit`` command-line interface.

Every subcommand accepts ``--config FILE`` (a JSON object whose keys are
flag names); explicit flags override config values. Exit codes: 0 on
success, 1 on a fatal error, 2 on partial success.
"""

from __future__ import annotations

import argparse
import csv
import fnmatch
import json
import os
import sys
import warnings
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from probekit import __version__
from probekit.bmi import bmi_curve
from probekit.chemprops import (
    compute_label_table,
    gen_pairs,
    load_library,
    read_pairs_csv,
    write_error_sidecar,
    write_pairs,
)
from probekit.core import (
    EmbeddingTable,
    RunMeta,
    join,
    load_embeddings,
    load_labels,
    save_embeddings,
    save_labels,
)
from probekit.pairwise import (
    MAX_COSINE_PAIRS,
    N_BINS,
    analyze_pairs,
    causal_effect_matrix,
    correlation,
    pair_embeddings_from_tables,
)
from probekit.probes import FitOptions, ReportRow, SplitPlan, fit_linear, fit_logistic, fit_poisson, run_linear_probing
from probekit.synth import SynthSpec, gen

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2
REPORT_FIELDS = ("model", "epoch", "layer") + ReportRow.FIELDS


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"probekit: {msg}", file=sys.stderr)


def _threads() -> int:
    raw = os.environ.get("PROBEKIT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"PROBEKIT_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise UsageError("PROBEKIT_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _split_list(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(t) for t in text]
    return [t.strip() for t in str(text).split(",") if t.strip()]


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_manifest(out: Path, command: str, args: argparse.Namespace) -> None:
    """Run record next to the main output; the timestamp is its only non-deterministic field."""
    record = {
        "command": command,
        "version": __version__,
        "args": {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(vars(args).items())
                 if k not in ("func", "no_timestamp", "config")},
    }
    if not args.no_timestamp:
        record["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    path = out.with_name(out.name + ".run.json")
    path.write_text(json.dumps(record, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def _as_list(v) -> list:
    return [v] if isinstance(v, (str, Path)) else list(v)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, [], "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _opts(args) -> FitOptions:
    return FitOptions(max_iter=args.max_iter, tol=args.tol, l2=args.l2, seed=args.seed)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen_labels(args) -> int:
    _require(args, "smiles", "props", "out")
    library = load_library(args.groups) if args.groups else None
    table, errors = compute_label_table(args.smiles, _split_list(args.props), library)
    out = Path(args.out)
    schema = save_labels(table, out)
    sidecar = out.with_name(out.name + ".errors.csv")
    if errors:
        write_error_sidecar(errors, sidecar)
        _err(f"{len(errors)} SMILES record(s) could not be parsed; see {sidecar}")
    elif sidecar.exists():
        sidecar.unlink()
    _write_manifest(out, "gen-labels", args)
    print(f"wrote {out} and {schema} ({len(table.ids)} molecules)")
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_gen_pairs(args) -> int:
    _require(args, "smiles", "group", "out")
    library = load_library(args.groups) if args.groups else None
    pairs, skipped = gen_pairs(args.smiles, args.group, args.limit, args.seed, library)
    paths = write_pairs(pairs, args.out)
    for mol_id, reason in skipped:
        _err(f"skipped {mol_id}: {reason}")
    _write_manifest(paths["pairs"], "gen-pairs", args)
    print(f"wrote {len(pairs)} pairs to {paths['pairs']}")
    return EXIT_OK


def _load_test_ids(path) -> frozenset[str] | None:
    if not path:
        return None
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(l.strip() for l in lines if l.strip() and not l.startswith("#"))


def _run_meta(emb: EmbeddingTable, path: str) -> tuple[str, int, int]:
    if emb.meta is not None:
        return emb.meta.model, emb.meta.epoch, emb.meta.layer
    return Path(path).stem, 0, 0


def write_report(rows: list[dict], path: Path) -> None:
    rows = sorted(rows, key=lambda r: (r["model"], r["epoch"], r["layer"], r["property"], r["metric"]))
    if path.suffix == ".json":
        path.write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in REPORT_FIELDS])


def read_report(path: str | Path) -> list[dict]:
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text(encoding="utf-8"))
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            missing = [k for k in ("model", "property", "value") if k not in r]
            if missing:
                raise ValueError(f"{path}: report is missing column(s) {', '.join(missing)}")
            r["value"] = None if r["value"] in ("NA", "") else float(r["value"])
            rows.append(r)
    return rows


def cmd_probe(args) -> int:
    _require(args, "emb", "labels", "out")
    labels = load_labels(args.labels)
    props = _split_list(args.props) if args.props else labels.properties
    unknown = [p for p in props if p not in labels.columns]
    if unknown:
        raise KeyError(f"unknown property {', '.join(unknown)} (label columns: {', '.join(labels.properties)})")
    plan = SplitPlan(args.test_frac, args.seed, args.stratified, _load_test_ids(args.split_ids))
    opts = _opts(args)
    tables = [(p, load_embeddings(p)) for p in _as_list(args.emb)]

    def run(item):
        path, emb = item
        model, epoch, layer = _run_meta(emb, path)
        return [{"model": model, "epoch": epoch, "layer": layer, **r.to_dict()}
                for r in run_linear_probing(emb, labels, props, plan, opts)]

    rows = [r for chunk in _pmap(run, tables, _threads()) for r in chunk]
    out = Path(args.out)
    write_report(rows, out)
    _write_manifest(out, "probe", args)
    n_na = sum(r["value"] is None for r in rows)
    print(f"wrote {len(rows)} rows to {out}" + (f" ({n_na} N/A)" if n_na else ""))
    return EXIT_OK


def _parse_sizes(text):
    if text is None:
        return None
    return [s if s == "all" else int(s) for s in _split_list(text)]


def cmd_bmi(args) -> int:
    _require(args, "emb", "labels", "prop", "out")
    emb_paths = _as_list(args.emb)
    if len(emb_paths) != 1:
        raise UsageError("bmi takes exactly one --emb file")
    emb = load_embeddings(emb_paths[0])
    ds = join(emb, load_labels(args.labels), args.prop)
    alpha = None
    if args.alpha is not None:
        vals = [float(a) for a in _split_list(args.alpha)]
        alpha = vals[0] if len(vals) == 1 else vals
    curve = bmi_curve(ds, _parse_sizes(args.sizes), args.test_frac, alpha, args.l2 if args.l2 is not None else 1.0,
                      args.seed, FitOptions(max_iter=args.max_iter, tol=args.tol), workers=_threads())
    out = Path(args.out)
    if out.suffix == ".json":
        curve.write_json(out)
    else:
        curve.write_csv(out)
    for m, reason in curve.skipped:
        _err(f"size {m} omitted: {reason}")
    _write_manifest(out, "bmi", args)
    print(f"wrote {len(curve.points)} BMI points to {out}")
    return EXIT_PARTIAL if curve.skipped else EXIT_OK


def _fit_for_kind(Z, y, kind, opts):
    if kind.name == "binary":
        return fit_logistic(Z, y, opts)
    if kind.name == "count":
        return fit_poisson(Z, y, opts)
    if kind.name == "continuous":
        return fit_linear(Z, y, opts.strength("ridge"))
    raise ValueError(f"causal effects are not defined for {kind} properties")


def cmd_pairwise(args) -> int:
    _require(args, "src_emb", "tgt_emb", "pairs", "out")
    src, tgt = load_embeddings(args.src_emb), load_embeddings(args.tgt_emb)
    by_group: dict[str, list[tuple[str, str]]] = defaultdict(list)
    for path in _as_list(args.pairs):
        for s, t, g in read_pairs_csv(path):
            by_group[g].append((s, t))
    stem = Path(args.out)
    partial = False
    unmatched_rows = []
    pes = {}
    for g in sorted(by_group):
        pe, missing = pair_embeddings_from_tables(src, tgt, by_group[g], g)
        if missing:
            partial = True
            unmatched_rows.extend((g, s, t) for s, t in missing)
            _err(f"group {g}: {len(missing)} pair(s) without embeddings")
        if pe.n < 2:
            _err(f"group {g}: fewer than 2 matched pairs; skipped")
            partial = True
            continue
        pes[g] = pe
    if not pes:
        raise ValueError("no group has at least 2 pairs with embeddings")
    opts = _opts(args)
    for g, pe in pes.items():
        rep = analyze_pairs(pe, args.max_pairs, args.bins, args.test_frac, args.seed, opts)
        base = stem.with_name(f"{stem.name}.{g}")
        rep.write_json(base.with_name(base.name + ".json"))
        rep.write_projection_csv(base.with_name(base.name + ".pca.csv"))
        rep.write_histogram_csv(base.with_name(base.name + ".cosine.csv"))
        for note in rep.notes:
            _err(f"group {g}: {note}")
    unmatched_path = stem.with_name(stem.name + ".unmatched.csv")
    if unmatched_rows:
        with open(unmatched_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["group", "source_id", "target_id"])
            w.writerows(unmatched_rows)
    if args.probe_labels:
        labels = load_labels(args.probe_labels)
        probes = {}
        for prop in labels.properties:
            ds = join(src, labels, prop)
            try:
                probes[prop] = _fit_for_kind(ds.Z, ds.p, ds.kind, opts)
            except ValueError as exc:
                partial = True
                _err(f"probe for {prop} not fitted: {exc}")
        eff = causal_effect_matrix(probes, pes)
        with open(stem.with_name(stem.name + ".effects.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["group", "property", "raw_effect", "centered_effect"])
            for g, p, raw, cen in eff.rows():
                w.writerow([g, p, repr(raw), repr(cen)])
    _write_manifest(stem, "pairwise", args)
    print(f"wrote pairwise reports for {len(pes)} group(s) under {stem}")
    return EXIT_PARTIAL if partial else EXIT_OK


def cmd_synth(args) -> int:
    _require(args, "mechanism", "n", "d", "out")
    spec = SynthSpec(args.mechanism, args.n, args.d, args.sigma, args.seed)
    stem = Path(args.out)
    ext = ".emb.f32" if args.format == "f32" else ".emb.csv"
    data = gen(spec)
    if spec.mechanism == "paired":
        meta = RunMeta(f"synth-{spec.mechanism}", 0, 0)
        src = EmbeddingTable(data.source_ids, data.Z, meta)
        tgt = EmbeddingTable(data.target_ids, data.Zp, meta)
        save_embeddings(src, stem.with_name(stem.name + ".source" + ext))
        save_embeddings(tgt, stem.with_name(stem.name + ".target" + ext))
        with open(stem.with_name(stem.name + ".pairs.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["source_id", "target_id", "group"])
            w.writerows((s, t, data.group) for s, t in zip(data.source_ids, data.target_ids))
    else:
        emb, labels = data
        save_embeddings(emb, stem.with_name(stem.name + ext))
        save_labels(labels, stem.with_name(stem.name + ".labels.csv"))
    _write_manifest(stem, "synth", args)
    print(f"wrote synthetic {spec.mechanism} data under {stem}")
    return EXIT_OK


def _parse_families(specs) -> dict[str, str]:
    fams = {}
    for s in _as_list(specs or []):
        name, sep, pattern = s.partition("=")
        if not sep or not name or not pattern:
            raise UsageError(f"--family expects NAME=GLOB, got {s!r}")
        fams[name] = pattern
    return fams


def cmd_report(args) -> int:
    _require(args, "inputs", "out")
    rows = [r for path in _as_list(args.inputs) for r in read_report(path)]
    families = _parse_families(args.family)
    pairs = []
    for spec in _as_list(args.correlate or []):
        names = _split_list(spec)
        if len(names) != 2:
            raise UsageError(f"--correlate expects A,B, got {spec!r}")
        pairs.append(tuple(names))
    wanted = sorted({n for p in pairs for n in p} | set(families))

    # per (model, family): mean of every non-missing value whose property matches
    sums: dict[tuple[str, str], list[float]] = defaultdict(list)
    for r in rows:
        if r["value"] is None:
            continue
        for fam in wanted:
            if fnmatch.fnmatchcase(r["property"], families.get(fam, fam)):
                sums[(r["model"], fam)].append(float(r["value"]))
    for fam in wanted:
        if not any(f == fam for _, f in sums):
            raise ValueError(f"metric family {fam!r} matches no report rows")
    means = {k: float(np.mean(v)) for k, v in sums.items()}

    out_rows = [("mean", m, f, repr(v), str(len(sums[(m, f)]))) for (m, f), v in sorted(means.items())]
    partial = False
    for a, b in pairs:
        models = sorted({m for m, f in means if f == a} & {m for m, f in means if f == b})
        dropped = sorted({m for m, f in means if f in (a, b)} - set(models))
        if dropped:
            partial = True
            _err(f"{a}~{b}: models missing one family were left out: {', '.join(dropped)}")
        r = correlation([means[(m, a)] for m in models], [means[(m, b)] for m in models])
        out_rows.append(("pearson", "", f"{a}~{b}", repr(r), str(len(models))))
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record", "model", "family", "value", "n"])
        w.writerows(out_rows)
    _write_manifest(out, "report", args)
    print(f"wrote {len(out_rows)} rows to {out}")
    return EXIT_PARTIAL if partial else EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from the run record")


def _add_fit(p: argparse.ArgumentParser, l2_help: str) -> None:
    p.add_argument("--l2", type=float, default=None, help=l2_help)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-frac", type=float, default=0.2)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="probekit", description="Linear, Bayesian and pairwise probing of embeddings.")
    parser.add_argument("--version", action="version", version=f"probekit {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("gen-labels", help="compute atom-count and functional-group labels from SMILES")
    p.add_argument("--smiles")
    p.add_argument("--props", help="comma-separated property names")
    p.add_argument("--groups", help="alternative functional-group library (JSON)")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_gen_labels)

    p = sub.add_parser("gen-pairs", help="build molecule pairs by removing one functional group")
    p.add_argument("--smiles")
    p.add_argument("--group")
    p.add_argument("--groups", help="alternative functional-group library (JSON)")
    p.add_argument("--out", help="output stem")
    p.add_argument("--limit", type=int)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_gen_pairs)

    p = sub.add_parser("probe", help="linear probing over one or more embedding files")
    p.add_argument("--emb", nargs="+")
    p.add_argument("--labels")
    p.add_argument("--props", help="comma-separated; default all label columns")
    p.add_argument("--stratified", action="store_true")
    p.add_argument("--split-ids", help="file listing test-set ids, one per line")
    p.add_argument("--out")
    _add_fit(p, "regularization strength (default 1.0 logistic/Poisson, 1e-6 ridge)")
    _add_common(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("bmi", help="Bayesian mutual information curve")
    p.add_argument("--emb", nargs=1)
    p.add_argument("--labels")
    p.add_argument("--prop")
    p.add_argument("--sizes", help="comma-separated training sizes; 'all' = whole training side")
    p.add_argument("--alpha", help="Dirichlet concentration (scalar or comma list)")
    p.add_argument("--out")
    _add_fit(p, "Gaussian prior precision (default 1.0)")
    _add_common(p)
    p.set_defaults(func=cmd_bmi)

    p = sub.add_parser("pairwise", help="pairwise geometry of source/target embeddings")
    p.add_argument("--src-emb")
    p.add_argument("--tgt-emb")
    p.add_argument("--pairs", nargs="+")
    p.add_argument("--probe-labels")
    p.add_argument("--max-pairs", type=int, default=MAX_COSINE_PAIRS)
    p.add_argument("--bins", type=int, default=N_BINS)
    p.add_argument("--out", help="output stem")
    _add_fit(p, "regularization strength for the probes")
    _add_common(p)
    p.set_defaults(func=cmd_pairwise)

    p = sub.add_parser("synth", help="generate synthetic data with known ground truth")
    p.add_argument("--mechanism")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "f32"), default="csv")
    p.add_argument("--out", help="output stem")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="aggregate reports and correlate metric families")
    p.add_argument("--in", dest="inputs", nargs="+")
    p.add_argument("--correlate", action="append", help="A,B (repeatable)")
    p.add_argument("--family", action="append", help="NAME=GLOB over property names (repeatable)")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_report)
    return parser


def _config_defaults(argv: Sequence[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    obj = json.loads(Path(known.config).read_text(encoding="utf-8"))
    if not isinstance(obj, dict):
        raise UsageError("config file must hold a JSON object")
    out = {}
    for k, v in obj.items():
        key = k.lstrip("-").replace("-", "_")
        out["inputs" if key == "in" else key] = v
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        defaults = _config_defaults(argv)
        if defaults:
            sub = next((a for a in argv if not a.startswith("-")), None)
            action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
            if sub in action.choices:
                sp = action.choices[sub]
                known = {a.dest for a in sp._actions}
                unknown = sorted(set(defaults) - known)
                if unknown:
                    raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
                sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_help(sys.stderr)
            return EXIT_FATAL
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_FATAL
    except KeyError as exc:
        _err(f"error: {exc.args[0] if exc.args else exc}")
        return EXIT_FATAL
    except (UsageError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        _err(f"error: {exc}")
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
