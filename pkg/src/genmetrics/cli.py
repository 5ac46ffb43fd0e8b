"""Command-line front end binding the metric modules into full workflows.

Every report embeds the tool version, the seed, the full parameter set
and sha256 digests of the inputs, and contains no timestamps, so runs
with equal inputs and seeds are byte-identical.

Exit codes: 0 success, 1 computation failure, 2 input-contract violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .divergence import (
    ar_loglik,
    ar_sample,
    exact_kl_enumerate,
    kl_estimate,
    random_model,
    rkl_estimate,
    save_model,
    testbed_trajectory,
)
from .errors import DataError, FormatError, MetricsError, UsageError
from .extrapolate import fid_infinity, is_infinity
from .gaussian import fid, rank_by_likelihood
from .kernel import KernelSpec, kid
from .score import inception_score
from .stattests import METHODS, ScoreTable, correlation_matrix, projection_normality
from .store import (
    DATA_SAMPLES,
    FeatureMatrix,
    LogLikelihoodTable,
    ProbMatrix,
    ProvenanceMeta,
    model_samples,
    read_matrix,
)

TOOL = "genmetrics"


# ---------------------------------------------------------------------------
# report plumbing


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _input_record(path, m) -> dict:
    record = {"path": str(path), "sha256": _sha256(path)}
    if isinstance(m, (FeatureMatrix, ProbMatrix)):
        record.update(rows=m.rows, cols=m.data.shape[1])
    if isinstance(m, LogLikelihoodTable):
        record.update(rows=m.rows, columns=m.column_names)
    if hasattr(m, "meta"):
        record["provenance"] = m.meta.to_dict()
    return record


def _report(command: str, seed, params: dict, inputs: dict, results: dict) -> dict:
    return {
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "seed": seed,
        "params": params,
        "inputs": inputs,
        "results": results,
    }


def _flatten(obj, prefix: str = "", out: dict | None = None) -> dict:
    if out is None:
        out = {}
    if isinstance(obj, dict):
        for key in sorted(obj):
            _flatten(obj[key], f"{prefix}{key}.", out)
    elif isinstance(obj, (list, tuple)):
        for i, item in enumerate(obj):
            _flatten(item, f"{prefix}{i}.", out)
    else:
        out[prefix[:-1]] = obj
    return out


def _csv_of(report: dict) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in sorted(_flatten(report).items()):
        if isinstance(value, float):
            value = repr(value)
        elif value is None:
            value = ""
        writer.writerow([key, value])
    return out.getvalue()


def _emit(args, report: dict, csv_text: str | None = None) -> None:
    if args.format == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    else:
        text = csv_text if csv_text is not None else _csv_of(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# typed loading


def _load_features(path) -> FeatureMatrix:
    m = read_matrix(path)
    if not isinstance(m, FeatureMatrix):
        raise UsageError(f"{path} is not a feature matrix")
    return m


def _load_probs(path) -> ProbMatrix:
    m = read_matrix(path)
    if not isinstance(m, ProbMatrix):
        raise UsageError(f"{path} is not a probability matrix")
    return m


def _load_table(path) -> LogLikelihoodTable:
    m = read_matrix(path)
    if not isinstance(m, LogLikelihoodTable):
        raise UsageError(f"{path} is not a log-likelihood table")
    return m


def _matched_feature_pair(real_path, gen_path) -> tuple[FeatureMatrix, FeatureMatrix]:
    real = _load_features(real_path)
    gen = _load_features(gen_path)
    if real.meta.backbone != gen.meta.backbone:
        raise UsageError(
            f"backbone mismatch: {real.meta.backbone!r} vs {gen.meta.backbone!r}; "
            "refusing to compare features from different extractors"
        )
    if real.cols != gen.cols:
        raise UsageError(f"feature dimension mismatch: {real.cols} vs {gen.cols}")
    return real, gen


# ---------------------------------------------------------------------------
# commands


def _cmd_fid(args) -> int:
    real, gen = _matched_feature_pair(args.real, args.gen)
    value = fid(real, gen)
    report = _report(
        "fid",
        None,
        {},
        {"real": _input_record(args.real, real), "gen": _input_record(args.gen, gen)},
        {"fid": value, "n_real": real.rows, "n_gen": gen.rows},
    )
    _emit(args, report)
    return 0


def _cmd_kid(args) -> int:
    real, gen = _matched_feature_pair(args.real, args.gen)
    result = kid(
        real,
        gen,
        subset_size=args.subset_size,
        n_subsets=args.subsets,
        seed=args.seed,
        kernel=KernelSpec(degree=args.degree),
    )
    report = _report(
        "kid",
        args.seed,
        {"subset_size": result.subset_size, "n_subsets": result.n_subsets, "degree": args.degree},
        {"real": _input_record(args.real, real), "gen": _input_record(args.gen, gen)},
        {"kid_mean": result.mean, "kid_std": result.std},
    )
    _emit(args, report)
    return 0


def _cmd_is(args) -> int:
    probs = _load_probs(args.probs)
    if args.shuffle:
        if args.seed is None:
            raise UsageError("--shuffle needs --seed")
        perm = np.random.default_rng(args.seed).permutation(probs.rows)
        probs = ProbMatrix(probs.data[perm], probs.meta)
    result = inception_score(probs, n_splits=args.splits)
    report = _report(
        "is",
        args.seed,
        {"n_splits": args.splits, "shuffle": bool(args.shuffle)},
        {"probs": _input_record(args.probs, probs)},
        {"is_mean": result.mean, "is_std": result.std},
    )
    _emit(args, report)
    return 0


def _curve_results(curve) -> dict:
    return {
        "intercept": curve.intercept,
        "slope": curve.slope,
        "r2": curve.r2,
        "points": [{"n": n, "score": s} for n, s in curve.points],
    }


def _cmd_fid_inf(args) -> int:
    real, gen = _matched_feature_pair(args.real, args.gen)
    curve = fid_infinity(real, gen, n_points=args.points, n_min=args.n_min, seed=args.seed)
    report = _report(
        "fid-inf",
        args.seed,
        {"n_points": args.points, "n_min": args.n_min},
        {"real": _input_record(args.real, real), "gen": _input_record(args.gen, gen)},
        _curve_results(curve),
    )
    _emit(args, report)
    return 0


def _cmd_is_inf(args) -> int:
    probs = _load_probs(args.probs)
    curve = is_infinity(probs, n_points=args.points, n_min=args.n_min, seed=args.seed)
    report = _report(
        "is-inf",
        args.seed,
        {"n_points": args.points, "n_min": args.n_min},
        {"probs": _input_record(args.probs, probs)},
        _curve_results(curve),
    )
    _emit(args, report)
    return 0


def _cmd_suite(args) -> int:
    real, gen = _matched_feature_pair(args.real, args.gen)
    probs = _load_probs(args.probs) if args.probs else None
    sub_seeds = [int(s) for s in np.random.SeedSequence(args.seed).generate_state(3, np.uint64)]
    cells: dict[str, dict] = {}

    def run(name, fn):
        try:
            cells[name] = {"status": "ok", **fn()}
        except MetricsError as exc:
            cells[name] = {"status": "failed", "error": str(exc)}

    def fid_cell():
        return {"value": fid(real, gen)}

    def kid_cell():
        r = kid(real, gen, subset_size=args.kid_subset_size, n_subsets=args.kid_subsets, seed=sub_seeds[0])
        return {"mean": r.mean, "std": r.std, "subset_size": r.subset_size, "seed": sub_seeds[0]}

    def fid_inf_cell():
        c = fid_infinity(real, gen, n_points=args.points, seed=sub_seeds[1])
        return {"value": c.intercept, "r2": c.r2, "seed": sub_seeds[1]}

    def is_cell():
        r = inception_score(probs, args.splits)
        return {"mean": r.mean, "std": r.std}

    def is_inf_cell():
        c = is_infinity(probs, n_points=args.points, seed=sub_seeds[2])
        return {"value": c.intercept, "r2": c.r2, "seed": sub_seeds[2]}

    run("fid", fid_cell)
    run("kid", kid_cell)
    run("fid_infinity", fid_inf_cell)
    if probs is None:
        cells["is"] = {"status": "skipped", "reason": "no probability file supplied"}
        cells["is_infinity"] = {"status": "skipped", "reason": "no probability file supplied"}
    else:
        run("is", is_cell)
        run("is_infinity", is_inf_cell)

    inputs = {"real": _input_record(args.real, real), "gen": _input_record(args.gen, gen)}
    if probs is not None:
        inputs["probs"] = _input_record(args.probs, probs)
    report = _report(
        "suite",
        args.seed,
        {
            "kid_subset_size": args.kid_subset_size,
            "kid_subsets": args.kid_subsets,
            "extrapolation_points": args.points,
            "is_splits": args.splits,
        },
        inputs,
        cells,
    )
    _emit(args, report)
    failed = any(cell.get("status") == "failed" for cell in cells.values())
    return 1 if failed else 0


def _cmd_divergence(args) -> int:
    table = _load_table(args.table)
    if args.direction == "kl":
        estimate = kl_estimate(table, args.model_col)
    else:
        estimate = rkl_estimate(table, args.model_col)
    results = {
        "value": estimate.value,
        "std_error": estimate.std_error,
        "n": estimate.n,
        "direction": estimate.direction,
    }
    # Columns named as bounds (ELBO/IWAE-style) are accepted but flagged:
    # the estimate then bounds the divergence instead of estimating it.
    if "bound" in args.model_col.lower():
        results["model_col_is_bound"] = True
        results["note"] = (
            "model column is labeled as a likelihood bound; "
            "the reported value bounds the divergence rather than estimating it"
        )
    report = _report(
        "divergence",
        None,
        {"model_col": args.model_col, "direction": args.direction},
        {"table": _input_record(args.table, table)},
        results,
    )
    _emit(args, report)
    return 0


def _cmd_normality(args) -> int:
    features = _load_features(args.features)
    result = projection_normality(features, n_projections=args.projections, seed=args.seed)
    report = _report(
        "normality",
        args.seed,
        {"n_projections": args.projections},
        {"features": _input_record(args.features, features)},
        {
            "mean_p": result.mean_p,
            "median_p": result.median_p,
            "frac_below_05": result.frac_below_05,
            "d": result.d,
            "per_projection_p": list(result.per_projection_p),
        },
    )
    _emit(args, report)
    return 0


def _cmd_anomaly(args) -> int:
    reference = _load_features(args.reference)
    candidates = _load_features(args.candidates)
    lowest, highest = rank_by_likelihood(reference, candidates, args.k)
    report = _report(
        "anomaly",
        None,
        {"k": args.k},
        {
            "reference": _input_record(args.reference, reference),
            "candidates": _input_record(args.candidates, candidates),
        },
        {
            "lowest": [{"index": i, "score": s} for i, s in lowest],
            "highest": [{"index": i, "score": s} for i, s in highest],
        },
    )
    _emit(args, report)
    return 0


def _cmd_correlate(args) -> int:
    text = Path(args.scores).read_text()
    table = ScoreTable.from_csv(text)
    rows = [r.strip() for r in args.rows.split(",")] if args.rows else None
    matrix = correlation_matrix(table, args.method, rows=rows)
    report = _report(
        "correlate",
        None,
        {"method": args.method, "rows": rows},
        {"scores": {"path": str(args.scores), "sha256": _sha256(args.scores)}},
        matrix.to_json_dict(),
    )
    _emit(args, report, csv_text=matrix.to_csv())
    return 0


# ---------------------------------------------------------------------------
# test bed


_TESTBED_DEFAULTS = {
    "seq_len": 6,
    "alphabet": 4,
    "n_checkpoints": 20,
    "noise_schedule": None,
    "n_samples": 2000,
    "embed_dim": 64,
    "n_classes": 10,
    "kid_subset_size": None,
    "kid_subsets": 50,
    "is_splits": 1,
}


def _geometric_schedule(n: int, start: float = 0.9, stop: float = 0.01) -> list[float]:
    if n == 1:
        return [start]
    ratio = (stop / start) ** (1.0 / (n - 1))
    return [start * ratio**i for i in range(n)]


def _one_hot_embed(seqs: np.ndarray, alphabet: int, projection: np.ndarray) -> np.ndarray:
    n, length = seqs.shape
    flat = np.zeros((n, length * alphabet))
    cols = seqs + alphabet * np.arange(length)[None, :]
    flat[np.arange(n)[:, None], cols] = 1.0
    return flat @ projection


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def _cmd_testbed(args) -> int:
    try:
        config = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"config {args.config} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise FormatError("testbed config must be a JSON object")
    unknown = set(config) - set(_TESTBED_DEFAULTS) - {"seed"}
    if unknown:
        raise UsageError(f"unknown testbed config keys: {sorted(unknown)}")
    if "seed" not in config:
        raise UsageError("testbed config must set a seed")
    seed = int(config["seed"])
    cfg = {**_TESTBED_DEFAULTS, **config}
    length, alphabet = int(cfg["seq_len"]), int(cfg["alphabet"])
    n_checkpoints = int(cfg["n_checkpoints"])
    n_samples = int(cfg["n_samples"])
    embed_dim = int(cfg["embed_dim"])
    n_classes = int(cfg["n_classes"])
    schedule = cfg["noise_schedule"] or _geometric_schedule(n_checkpoints)
    kid_subset = cfg["kid_subset_size"] or min(500, n_samples)
    kid_subsets = int(cfg["kid_subsets"])
    is_splits = int(cfg["is_splits"])

    # Sub-seed layout: 0 target model, 1 embedding, 2 classifier, 3 data draw,
    # then one sampling and one KID seed per checkpoint.
    state = np.random.SeedSequence(seed).generate_state(4 + 2 * n_checkpoints, np.uint64)
    sub = [int(s) for s in state]

    target = random_model(length, alphabet, seed=sub[0])
    checkpoints = testbed_trajectory(target, n_checkpoints, schedule)
    onehot_dim = length * alphabet
    projection = np.random.default_rng(sub[1]).standard_normal((onehot_dim, embed_dim)) / np.sqrt(onehot_dim)
    classifier = np.random.default_rng(sub[2]).standard_normal((embed_dim, n_classes)) / np.sqrt(embed_dim)

    meta = ProvenanceMeta(backbone="synthetic", preprocessing="onehot-random-projection")
    data_seqs, data_ll = ar_sample(target, n_samples, seed=sub[3])
    real_features = FeatureMatrix(_one_hot_embed(data_seqs, alphabet, projection), meta)

    labels, rows, div_rows = [], [], []
    for i, (ckpt, weight) in enumerate(zip(checkpoints, schedule)):
        label = f"ck-{i:02d}"
        exact_kl = exact_kl_enumerate(target, ckpt)
        exact_rkl = exact_kl_enumerate(ckpt, target)

        model_id = f"checkpoint-{i:02d}"
        ckpt_ll_on_data, _ = ar_loglik(ckpt, data_seqs)
        kl_table = LogLikelihoodTable(
            source=DATA_SAMPLES,
            columns={"ground-truth": data_ll, model_id: ckpt_ll_on_data},
            meta=meta,
        )
        mc_kl = kl_estimate(kl_table, model_id)

        gen_seqs, gen_ll = ar_sample(ckpt, n_samples, seed=sub[4 + i])
        target_ll_on_gen, _ = ar_loglik(target, gen_seqs)
        rkl_table = LogLikelihoodTable(
            source=model_samples(model_id),
            columns={"ground-truth": target_ll_on_gen, model_id: gen_ll},
            meta=meta,
        )
        mc_rkl = rkl_estimate(rkl_table, model_id)

        gen_features = FeatureMatrix(_one_hot_embed(gen_seqs, alphabet, projection), meta)
        fid_value = fid(real_features, gen_features)
        kid_value = kid(
            real_features,
            gen_features,
            subset_size=int(kid_subset),
            n_subsets=kid_subsets,
            seed=sub[4 + n_checkpoints + i],
        )
        probs = ProbMatrix(
            _softmax_rows(gen_features.data.astype(np.float64) @ classifier), meta
        )
        is_value = inception_score(probs, n_splits=is_splits)

        labels.append(label)
        rows.append([exact_kl, exact_rkl, fid_value, kid_value.mean, -is_value.mean])
        div_rows.append(
            {
                "checkpoint": label,
                "noise_weight": float(weight),
                "exact_kl": exact_kl,
                "exact_rkl": exact_rkl,
                "mc_kl": mc_kl.value,
                "mc_kl_se": mc_kl.std_error,
                "mc_rkl": mc_rkl.value,
                "mc_rkl_se": mc_rkl.std_error,
                "n_samples": n_samples,
            }
        )

    metrics = ("kl", "rkl", "fid", "kid", "neg_is")
    table = ScoreTable(
        row_labels=tuple(labels),
        metrics=metrics,
        values=np.array(rows),
        orientations={m: "lower" for m in metrics},
    )
    Path(args.out_scores).write_text(table.to_csv())

    fields = list(div_rows[0])
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in div_rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    Path(args.out_divergences).write_text(out.getvalue())

    outputs = {"scores": str(args.out_scores), "divergences": str(args.out_divergences)}
    if args.out_models:
        models_dir = Path(args.out_models)
        models_dir.mkdir(parents=True, exist_ok=True)
        save_model(target, models_dir / "target.json")
        for i, ckpt in enumerate(checkpoints):
            save_model(ckpt, models_dir / f"checkpoint-{i:02d}.json")
        outputs["models"] = str(models_dir)

    report = _report(
        "testbed",
        seed,
        {**cfg, "noise_schedule": [float(w) for w in schedule], "kid_subset_size": int(kid_subset)},
        {"config": {"path": str(args.config), "sha256": _sha256(args.config)}},
        {"outputs": outputs, "n_checkpoints": n_checkpoints},
    )
    _emit(args, report)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(sub, *, seed: bool | str = False) -> None:
    sub.add_argument("--format", choices=("json", "csv"), default="json")
    sub.add_argument("--out", help="write the report here instead of stdout")
    if seed == "required":
        sub.add_argument("--seed", type=int, required=True, help="RNG seed (required: command is randomized)")
    elif seed:
        sub.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL, description=__doc__)
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("fid", help="Frechet distance between two feature files")
    p.add_argument("real")
    p.add_argument("gen")
    _add_common(p)
    p.set_defaults(func=_cmd_fid)

    p = commands.add_parser("kid", help="kernel distance (subset-averaged unbiased MMD^2)")
    p.add_argument("real")
    p.add_argument("gen")
    p.add_argument("--subset-size", type=int, default=None)
    p.add_argument("--subsets", type=int, default=100)
    p.add_argument("--degree", type=int, default=3)
    _add_common(p, seed="required")
    p.set_defaults(func=_cmd_kid)

    p = commands.add_parser("is", help="inception-style score from a probability file")
    p.add_argument("probs")
    p.add_argument("--splits", type=int, default=10)
    p.add_argument("--shuffle", action="store_true", help="shuffle rows before splitting (needs --seed)")
    _add_common(p, seed=True)
    p.set_defaults(func=_cmd_is)

    p = commands.add_parser("fid-inf", help="FID extrapolated to infinite sample count")
    p.add_argument("real")
    p.add_argument("gen")
    p.add_argument("--points", type=int, default=15)
    p.add_argument("--n-min", type=int, default=None)
    _add_common(p, seed="required")
    p.set_defaults(func=_cmd_fid_inf)

    p = commands.add_parser("is-inf", help="score extrapolated to infinite sample count")
    p.add_argument("probs")
    p.add_argument("--points", type=int, default=15)
    p.add_argument("--n-min", type=int, default=None)
    _add_common(p, seed="required")
    p.set_defaults(func=_cmd_is_inf)

    p = commands.add_parser("suite", help="FID, KID, FID-inf, IS and IS-inf in one report")
    p.add_argument("real")
    p.add_argument("gen")
    p.add_argument("--probs", default=None)
    p.add_argument("--kid-subset-size", type=int, default=None)
    p.add_argument("--kid-subsets", type=int, default=100)
    p.add_argument("--points", type=int, default=15)
    p.add_argument("--splits", type=int, default=10)
    _add_common(p, seed="required")
    p.set_defaults(func=_cmd_suite)

    p = commands.add_parser("divergence", help="Monte-Carlo KL or RKL from a log-likelihood table")
    p.add_argument("table")
    p.add_argument("--model-col", required=True)
    p.add_argument("--direction", choices=("kl", "rkl"), required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_divergence)

    p = commands.add_parser("normality", help="random-projection normality report for a feature file")
    p.add_argument("features")
    p.add_argument("--projections", type=int, default=1000)
    _add_common(p, seed="required")
    p.set_defaults(func=_cmd_normality)

    p = commands.add_parser("anomaly", help="rank candidates by likelihood under reference features")
    p.add_argument("reference")
    p.add_argument("candidates")
    p.add_argument("-k", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_anomaly)

    p = commands.add_parser("correlate", help="pairwise metric correlations over a score table")
    p.add_argument("scores")
    p.add_argument("--method", choices=METHODS, default="kendall")
    p.add_argument("--rows", default=None, help="comma-separated row labels to keep")
    _add_common(p)
    p.set_defaults(func=_cmd_correlate)

    p = commands.add_parser("testbed", help="metric trajectory on the tractable categorical test bed")
    p.add_argument("config", help="JSON config; must set a seed")
    p.add_argument("--out-scores", required=True)
    p.add_argument("--out-divergences", required=True)
    p.add_argument("--out-models", default=None, help="also dump target/checkpoint models here")
    _add_common(p)
    p.set_defaults(func=_cmd_testbed)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, DataError, UsageError, FileNotFoundError) as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return 2
    except MetricsError as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{TOOL}: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
