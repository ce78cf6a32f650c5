"""Command-line surface and stage orchestration.

Each subcommand reads the previous stage's CSV/JSON artifacts, writes its own
atomically, and records a run_meta.json with the resolved configuration and
input digests.  Exit codes: 0 ok, 2 schema error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .errors import MetmorphError, NumericalError, SchemaError
from .io import (
    atomic_write_text,
    fmt_float,
    read_csv,
    read_json,
    write_csv,
    write_json,
    write_run_meta,
)
from .naming import LABELS, split_feature_name
from .cellfeat.io import extract_corpus, read_cell_features_csv, write_cell_features_csv
from .slideagg import (
    AggregationConfig,
    aggregate_slide,
    read_slide_features_csv,
    write_slide_features_csv,
)
from .stats import run_univariate_screen, univariate_table
from .sparsemodel import (
    DEFAULT_CANDIDATES,
    ModelCandidate,
    evaluate_holdout,
    load_model,
    nested_cv,
    predict_scores,
    save_model,
    stability_select,
    stratified_split,
    tune_and_fit,
)
from .synthgen import (
    CellEffect,
    FeatureCohortSpec,
    FeatureShift,
    GeneratorSpec,
    generate_cohort,
    sample_feature_cohort,
)
from .report import (
    render_coefficients_svg,
    render_heatmap_svg,
    render_pr_svg,
    render_roc_svg,
)

MANIFEST_HEADER = ["slide_id", "met_label", "procedure_type", "split"]


def read_manifest(path):
    header, rows = read_csv(path)
    if header != MANIFEST_HEADER:
        raise SchemaError(f"{path}: expected header {MANIFEST_HEADER}, got {header}")
    out = []
    seen = set()
    for i, row in enumerate(rows, start=2):
        if len(row) != 4:
            raise SchemaError(f"{path}: row {i} has {len(row)} fields")
        slide_id, label, procedure, split = row
        if slide_id in seen:
            raise SchemaError(f"{path}: row {i}: duplicate slide_id {slide_id!r}")
        seen.add(slide_id)
        if label not in LABELS:
            raise SchemaError(f"{path}: row {i}: unknown met_label {label!r}")
        if split not in ("train", "holdout", "unassigned"):
            raise SchemaError(f"{path}: row {i}: unknown split {split!r}")
        out.append(
            {
                "slide_id": slide_id,
                "met_label": label,
                "procedure_type": procedure,
                "split": split,
            }
        )
    return out


def write_manifest(path, rows):
    write_csv(
        path,
        MANIFEST_HEADER,
        [(r["slide_id"], r["met_label"], r["procedure_type"], r["split"]) for r in rows],
    )


def _parse_design(text):
    try:
        r, k = text.lower().split("x")
        return (int(r), int(k))
    except ValueError:
        raise SchemaError(f"bad design {text!r}, expected RxK like 10x10") from None


def _parse_weights(text):
    if text == "balanced":
        return "balanced"
    try:
        a, b = (float(x) for x in text.split(","))
        return (a, b)
    except ValueError:
        raise SchemaError(f"bad weights {text!r}, expected 'balanced' or 'a,b'") from None


def _parse_slides(text):
    mapping = {"wt": "wild_type", "amp": "amplified", "exon14": "exon14", "dual": "amplified_and_exon14"}
    out = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        key = key.strip()
        label = mapping.get(key, key)
        if label not in LABELS:
            raise SchemaError(f"unknown label {key!r} in --slides")
        out[label] = int(value)
    return out


def _load_effects(path, mode):
    if path is None:
        return ()
    payload = read_json(path)
    effects = []
    try:
        for item in payload:
            classes = tuple(item["label_classes"])
            if mode == "vectors":
                effects.append(FeatureShift(item["feature"], classes, float(item["size_mad"])))
            else:
                effects.append(
                    CellEffect(item["channel"], item["cell_class"], classes, float(item["size_mad"]))
                )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: bad effects entry: {exc}") from exc
    return tuple(effects)


def cmd_synth(args) -> int:
    out = Path(args.output)
    n_per_class = _parse_slides(args.slides)
    effects = _load_effects(args.effects, args.mode)
    if args.mode == "corpus":
        spec = GeneratorSpec(
            seed=args.seed,
            n_per_class=n_per_class,
            tile_size=args.tile_size,
            effects=effects,
            cell_count_scale=args.cells_scale,
        )
        generate_cohort(spec, out)
    else:
        spec = FeatureCohortSpec(seed=args.seed, n_per_class=n_per_class, shifts=effects)
        cohort, truth = sample_feature_cohort(spec)
        write_slide_features_csv(out / "slide_features.csv", cohort)
        write_manifest(
            out / "manifest.csv",
            [
                {
                    "slide_id": v.slide_id,
                    "met_label": v.label,
                    "procedure_type": v.provenance["procedure_type"],
                    "split": "unassigned",
                }
                for v in cohort
            ],
        )
        write_json(out / "truth.json", truth)
    write_run_meta(
        out,
        "synth",
        {
            "mode": args.mode,
            "seed": args.seed,
            "slides": n_per_class,
            "tile_size": args.tile_size,
            "cells_scale": args.cells_scale,
            "effects": args.effects and str(args.effects),
        },
        [args.effects] if args.effects else [],
    )
    return 0


def cmd_extract(args) -> int:
    corpus = Path(args.input)
    out = Path(args.output)
    slides_dir = corpus / "slides"
    if not slides_dir.is_dir():
        raise FileNotFoundError(f"{slides_dir} does not exist")
    by_slide = extract_corpus(slides_dir, jobs=args.jobs)
    for slide_id, records in by_slide.items():
        write_cell_features_csv(out / slide_id / "cell_features.csv", records)
    write_run_meta(
        out,
        "extract",
        {"input": str(corpus), "jobs": args.jobs, "n_slides": len(by_slide)},
    )
    return 0


def cmd_aggregate(args) -> int:
    out = Path(args.output)
    manifest = read_manifest(args.manifest)
    labels = {r["slide_id"]: r["met_label"] for r in manifest}
    extract_dir = Path(args.input)
    clip_low, clip_high = (float(x) for x in args.clip.split(","))
    cfg = AggregationConfig(
        subsample_fraction=args.subsample_fraction,
        min_cells_full_use=args.min_cells_full_use,
        clip_low=clip_low,
        clip_high=clip_high,
        seed=args.seed,
    )
    vectors = []
    meta = {"schema_version": 1, "config": cfg.__dict__, "slides": {}}
    slide_dirs = sorted(
        p.name for p in extract_dir.iterdir() if (p / "cell_features.csv").is_file()
    )
    if not slide_dirs:
        raise SchemaError(f"{extract_dir}: no <slide_id>/cell_features.csv found")
    for slide_id in slide_dirs:
        records = read_cell_features_csv(extract_dir / slide_id / "cell_features.csv")
        label = labels.get(slide_id)
        vector = aggregate_slide(slide_id, records, cfg, label=label)
        vectors.append(vector)
        meta["slides"][slide_id] = vector.provenance
    write_slide_features_csv(out / "slide_features.csv", vectors)
    write_json(out / "aggregation_meta.json", meta)
    write_run_meta(
        out,
        "aggregate",
        {
            "input": str(extract_dir),
            "manifest": str(args.manifest),
            "seed": args.seed,
            "subsample_fraction": args.subsample_fraction,
            "clip": [clip_low, clip_high],
            "min_cells_full_use": args.min_cells_full_use,
        },
        [args.manifest],
    )
    return 0


def cmd_univariate(args) -> int:
    out = Path(args.output)
    cohort = read_slide_features_csv(args.input)
    results, heatmap = run_univariate_screen(
        cohort, alpha=args.alpha, include_dual=args.include_dual
    )
    table = univariate_table(results)
    write_csv(
        out / "univariate.csv",
        ["cell", "family", "feature", "statistic", "direction", "q_wt_vs_amp", "q_wt_vs_exon14"],
        [
            (
                r["cell"],
                r["family"],
                r["feature"],
                r["statistic"],
                r["direction"],
                fmt_float(r["q_wt_vs_amp"]),
                fmt_float(r["q_wt_vs_exon14"]),
            )
            for r in table
        ],
    )
    write_csv(
        out / "heatmap.csv",
        ["feature", "band", "median_wild_type", "median_amplified", "median_exon14"],
        [
            (
                r["feature"],
                r["band"],
                fmt_float(r["median_wild_type"]),
                fmt_float(r["median_amplified"]),
                fmt_float(r["median_exon14"]),
            )
            for r in heatmap.rows
        ],
    )
    if args.plots:
        atomic_write_text(out / "heatmap.svg", render_heatmap_svg(heatmap.rows))
    write_run_meta(
        out,
        "univariate",
        {"input": str(args.input), "alpha": args.alpha, "include_dual": args.include_dual},
        [args.input],
    )
    return 0


def cmd_split(args) -> int:
    out = Path(args.output)
    manifest = read_manifest(args.manifest)
    cohort = read_slide_features_csv(args.features)
    by_id = {v.slide_id: v for v in cohort}
    missing = [r["slide_id"] for r in manifest if r["slide_id"] not in by_id]
    if missing:
        raise SchemaError(f"manifest slides missing from features: {missing[:5]}")
    train_ids, holdout_ids = stratified_split(manifest, args.fraction, args.seed)
    train_set = set(train_ids)
    for row in manifest:
        row["split"] = "train" if row["slide_id"] in train_set else "holdout"
    write_manifest(out / "split_manifest.csv", manifest)
    write_slide_features_csv(out / "train_features.csv", [by_id[s] for s in train_ids])
    write_slide_features_csv(out / "holdout_features.csv", [by_id[s] for s in holdout_ids])
    write_run_meta(
        out,
        "split",
        {
            "manifest": str(args.manifest),
            "features": str(args.features),
            "fraction": args.fraction,
            "seed": args.seed,
            "n_train": len(train_ids),
            "n_holdout": len(holdout_ids),
        },
        [args.manifest, args.features],
    )
    return 0


def _candidate_grid(args):
    weights = _parse_weights(args.weights) if args.weights else None
    families = []
    if args.relaxed and args.lasso_only:
        raise SchemaError("--relaxed and --lasso-only are mutually exclusive")
    if args.relaxed:
        families = ["relaxed"]
    elif args.lasso_only:
        families = ["lasso"]
    if not families and weights is None:
        return DEFAULT_CANDIDATES
    families = families or ["lasso", "relaxed"]
    weight_list = [weights] if weights is not None else ["balanced", (0.3, 0.7), (0.5, 0.5)]
    return tuple(ModelCandidate(f, w) for f in families for w in weight_list)


def cmd_train_cv(args) -> int:
    out = Path(args.output)
    cohort = read_slide_features_csv(args.input)
    labeled = [v for v in cohort if v.label is not None]
    if len(labeled) < len(cohort):
        raise SchemaError("train-cv requires labels for every slide")
    candidates = _candidate_grid(args)
    result = nested_cv(
        cohort,
        candidates=candidates,
        outer_design=_parse_design(args.outer_design),
        inner_design=_parse_design(args.inner_design),
        seed=args.seed,
        jobs=args.jobs,
    )
    rows = []
    for name in sorted(result.reports):
        for f in result.reports[name].folds:
            rows.append(
                (
                    f.candidate,
                    str(f.repeat),
                    str(f.fold),
                    fmt_float(f.lam),
                    fmt_float(f.gamma),
                    fmt_float(f.auc),
                    str(f.n_active),
                )
            )
    write_csv(
        out / "cv_report.csv",
        ["candidate", "repeat", "fold", "lambda", "gamma", "auc", "n_active"],
        rows,
    )
    winner_report = result.winner_report
    write_csv(
        out / "fold_coefficients.csv",
        ["candidate", "repeat", "fold", "feature", "coefficient"],
        [
            (f.candidate, str(f.repeat), str(f.fold), name, fmt_float(value))
            for f in winner_report.folds
            for name, value in sorted(f.coefficients.items())
        ],
    )
    stable = stability_select(winner_report) if len(winner_report.folds) >= 4 else []
    write_csv(
        out / "stability.csv",
        ["feature", "cell", "family", "feature_token", "statistic", "sign", "q25", "q75"],
        [
            (
                s.feature_name,
                *split_feature_name(s.feature_name),
                str(s.sign),
                fmt_float(s.q25),
                fmt_float(s.q75),
            )
            for s in stable
        ],
    )
    write_json(
        out / "cv_summary.json",
        {
            "schema_version": 1,
            "winner": result.winner,
            "outer_design": list(_parse_design(args.outer_design)),
            "inner_design": list(_parse_design(args.inner_design)),
            "seed": args.seed,
            "candidates": {
                name: {
                    "mean_auc": report.mean_auc,
                    "sd_auc": report.sd_auc,
                    "n_folds": len(report.folds),
                }
                for name, report in sorted(result.reports.items())
            },
            "n_stable_features": len(stable),
        },
    )
    write_run_meta(
        out,
        "train-cv",
        {
            "input": str(args.input),
            "outer_design": args.outer_design,
            "inner_design": args.inner_design,
            "seed": args.seed,
            "jobs": args.jobs,
            "candidates": [c.name for c in candidates],
        },
        [args.input],
    )
    return 0


def _write_coefficients_csv(path, model):
    items = sorted(model.coefficients.items(), key=lambda t: (t[1], t[0]))
    write_csv(
        path,
        ["cell", "family", "feature", "statistic", "coefficient"],
        [(*split_feature_name(name), fmt_float(value)) for name, value in items],
    )


def cmd_train_final(args) -> int:
    out = Path(args.output)
    cohort = read_slide_features_csv(args.input)
    family, weights = "lasso", "balanced"
    if args.cv_summary:
        summary = read_json(args.cv_summary)
        family, weight_text = summary["winner"].split("|")
        weights = _parse_weights(weight_text)
    if args.weights:
        weights = _parse_weights(args.weights)
    if args.relaxed:
        family = "relaxed"
    elif args.lasso_only:
        family = "lasso"
    model = tune_and_fit(
        cohort,
        family=family,
        weights=weights,
        inner_design=_parse_design(args.inner_design),
        seed=args.seed,
    )
    save_model(out / "model.json", model)
    _write_coefficients_csv(out / "coefficients.csv", model)
    write_run_meta(
        out,
        "train-final",
        {
            "input": str(args.input),
            "family": family,
            "weights": weights if isinstance(weights, str) else list(weights),
            "inner_design": args.inner_design,
            "seed": args.seed,
        },
        [args.input] + ([args.cv_summary] if args.cv_summary else []),
    )
    return 0


def cmd_predict(args) -> int:
    out = Path(args.output)
    model = load_model(args.model)
    cohort = read_slide_features_csv(args.input)
    scores = predict_scores(model, cohort)
    write_csv(
        out / "predictions.csv",
        ["slide_id", "label", "score"],
        [
            (v.slide_id, v.label or "", fmt_float(float(s)))
            for v, s in zip(cohort, scores)
        ],
    )
    write_run_meta(
        out,
        "predict",
        {"model": str(args.model), "input": str(args.input)},
        [args.model, args.input],
    )
    return 0


def cmd_report(args) -> int:
    out = Path(args.output)
    inputs = []
    if args.model and args.features:
        model = load_model(args.model)
        cohort = read_slide_features_csv(args.features)
        result = evaluate_holdout(model, cohort)
        write_csv(
            out / "roc_points.csv",
            ["fpr", "tpr", "threshold"],
            [(fmt_float(a), fmt_float(b), fmt_float(c)) for a, b, c in result["roc_points"]],
        )
        write_csv(
            out / "pr_points.csv",
            ["recall", "precision", "threshold"],
            [(fmt_float(a), fmt_float(b), fmt_float(c)) for a, b, c in result["pr_points"]],
        )
        write_json(
            out / "metrics.json",
            {
                "schema_version": 1,
                "n": result["n"],
                "auc": result["auc"],
                "average_precision": result["average_precision"],
                "subgroup_auc": result["subgroup_auc"],
            },
        )
        if args.plots:
            atomic_write_text(
                out / "roc.svg",
                render_roc_svg(result["roc_points"], result["auc"], "Holdout ROC"),
            )
            atomic_write_text(
                out / "pr.svg",
                render_pr_svg(result["pr_points"], result["average_precision"], "Holdout PR"),
            )
            atomic_write_text(
                out / "coefficients.svg",
                render_coefficients_svg(sorted(model.coefficients.items())),
            )
        _write_coefficients_csv(out / "coefficients.csv", model)
        inputs += [args.model, args.features]
    if args.heatmap:
        header, rows = read_csv(args.heatmap)
        parsed = [
            {
                "feature": r[0],
                "band": r[1],
                "median_wild_type": float(r[2]) if r[2] else float("nan"),
                "median_amplified": float(r[3]) if r[3] else float("nan"),
                "median_exon14": float(r[4]) if r[4] else float("nan"),
            }
            for r in rows
        ]
        if args.plots:
            atomic_write_text(out / "heatmap.svg", render_heatmap_svg(parsed))
        inputs.append(args.heatmap)
    write_run_meta(
        out,
        "report",
        {
            "model": args.model and str(args.model),
            "features": args.features and str(args.features),
            "heatmap": args.heatmap and str(args.heatmap),
            "plots": args.plots,
        },
        inputs,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metmorph",
        description="Cell-morphology features and sparse MET-alteration models from segmented H&E tiles.",
    )
    parser.add_argument("--version", action="version", version=f"metmorph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("corpus", "vectors"), default="corpus")
    p.add_argument("--slides", default="wt=12,amp=5,exon14=5,dual=0")
    p.add_argument("--tile-size", type=int, default=256)
    p.add_argument("--cells-scale", type=float, default=1.0)
    p.add_argument("--effects", default=None, help="JSON file of planted effects")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="per-cell features from tiles + masks")
    p.add_argument("--input", required=True, help="corpus directory")
    p.add_argument("--output", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("aggregate", help="372-feature slide vectors")
    p.add_argument("--input", required=True, help="extract output directory")
    p.add_argument("--manifest", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subsample-fraction", type=float, default=0.2)
    p.add_argument("--min-cells-full-use", type=int, default=50)
    p.add_argument("--clip", default="1,99")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("univariate", help="Mann-Whitney screen with BH correction")
    p.add_argument("--input", required=True, help="slide_features.csv")
    p.add_argument("--output", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--include-dual", action="store_true")
    p.add_argument("--plots", action="store_true")
    p.set_defaults(func=cmd_univariate)

    p = sub.add_parser("split", help="stratified train/holdout split")
    p.add_argument("--features", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--fraction", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train-cv", help="nested cross-validation over the candidate grid")
    p.add_argument("--input", required=True, help="train_features.csv")
    p.add_argument("--output", required=True)
    p.add_argument("--outer-design", default="10x10")
    p.add_argument("--inner-design", default="5x5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--weights", default=None, help="balanced or a,b; restricts the grid")
    p.add_argument("--relaxed", action="store_true")
    p.add_argument("--lasso-only", action="store_true")
    p.set_defaults(func=cmd_train_cv)

    p = sub.add_parser("train-final", help="re-tune and fit on the full training cohort")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--cv-summary", default=None, help="cv_summary.json to pick the winner")
    p.add_argument("--weights", default=None)
    p.add_argument("--relaxed", action="store_true")
    p.add_argument("--lasso-only", action="store_true")
    p.add_argument("--inner-design", default="5x5")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_final)

    p = sub.add_parser("predict", help="score slides with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="holdout metrics, curves and figures")
    p.add_argument("--output", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--features", default=None, help="holdout slide_features.csv")
    p.add_argument("--heatmap", default=None, help="heatmap.csv from the univariate stage")
    p.add_argument("--plots", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except MetmorphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
