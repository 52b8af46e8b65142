"""Command-line front end: mix, triplets, score, filter, metrics, report.

Exit codes: 0 success, 1 usage or configuration error, 2 partial data
failure, 3 transport failure. Per-row problems in mix/score never abort the
whole run; they are collected into an error manifest next to the output.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import pipeline as pl
from . import scoring
from .config import RunConfig, apply_flag_overrides, load_run_config
from .errors import (
    ConfigError,
    EditForgeError,
    ScoreJoinError,
    TransportFailure,
)
from .filtering import run_cascade
from .manifest import dump_jsonl, rebase_ref, resolve_ref
from .metrics import (
    EmbeddingSet,
    LogitSet,
    correlation_grid,
    cosine_similarity_score,
    frechet_distance,
    inception_score,
    kl_paired,
    load_matrix,
    load_paired_manifest,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_TRANSPORT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--seed", type=int, help="global random seed (default 1984)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="editforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mix", help="mix pool rows into (A+B, A+C) tuples")
    p.add_argument("pool", help="pool manifest: a_ref/b_ref/c_ref + prompts per line")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--stride", type=float, help="window search stride, seconds")
    p.add_argument("--split1", type=float, help="before/middle band boundary, seconds")
    p.add_argument("--split2", type=float, help="middle/after band boundary, seconds")
    p.add_argument("--workers", type=int, help="parallel row workers")
    _add_common(p)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("triplets", help="expand tuples into editing triplets")
    p.add_argument("tuples", help="tuple manifest from mix")
    p.add_argument("--out", required=True, help="output triplet manifest path")
    _add_common(p)
    p.set_defaults(func=cmd_triplets)

    p = sub.add_parser("score", help="attach quality/relevance/faithfulness scores")
    p.add_argument("triplets", help="triplet manifest")
    p.add_argument("--out", required=True, help="output score manifest path")
    p.add_argument("--scorer", choices=("stub", "file", "remote"))
    p.add_argument("--scores", help="score manifest to join (scorer=file)")
    p.add_argument("--endpoint", help="scorer service base URL (scorer=remote)")
    p.add_argument("--workers", type=int, help="concurrent remote batches")
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("filter", help="run the three-stage score cascade")
    p.add_argument("triplets", help="triplet manifest")
    p.add_argument("scores", help="score manifest")
    p.add_argument("--out", required=True, help="output filtered triplet manifest")
    p.add_argument("--report", help="filter report path (default: <out>.report.json)")
    p.add_argument("--stage1-fraction", type=float, dest="stage1_fraction")
    p.add_argument("--quality-min", type=float, dest="quality_min")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument(
        "--per-task", action=argparse.BooleanOptionalAction, default=None,
        help="run stages independently per op (default: on)",
    )
    _add_common(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("metrics", help="correlation and distribution metrics")
    p.add_argument("--paired", help="paired human/predicted score manifest")
    p.add_argument("--embeddings", nargs=2, metavar=("REF", "EVAL"),
                   help="two embedding matrix files for Fréchet distance")
    p.add_argument("--logits", nargs=2, metavar=("EVAL", "REF"),
                   help="two paired logit matrix files for KL divergence")
    p.add_argument("--is-logits", dest="is_logits", help="logit matrix for inception score")
    p.add_argument("--clap", nargs=2, metavar=("AUDIO", "TEXT"),
                   help="two row-paired embedding files for mean cosine similarity (%%)")
    p.add_argument("--out", required=True, help="output metric report (JSON)")
    _add_common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("report", help="render figures and CSV summaries")
    p.add_argument("--scores", help="score manifest to summarize")
    p.add_argument("--filter-report", dest="filter_report", help="filter report JSON")
    p.add_argument("--paired", help="paired score manifest for the metrics grid")
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def _config(args) -> RunConfig:
    return apply_flag_overrides(load_run_config(getattr(args, "config", None)), args)


def _write_errors(errors, path) -> None:
    dump_jsonl(path, (asdict(e) for e in errors))


def cmd_mix(args) -> int:
    cfg = _config(args)
    out_dir = Path(args.out)
    records, errors = pl.synthesize_pool(
        args.pool, out_dir, cfg.caption_config(),
        stride_s=cfg.stride_s, workers=cfg.workers,
    )
    pl.write_tuple_manifest(records, out_dir / "tuples.jsonl")
    if errors:
        _write_errors(errors, out_dir / "errors.jsonl")
        print(f"mix: {len(records)} tuples, {len(errors)} failed rows "
              f"(see {out_dir / 'errors.jsonl'})", file=sys.stderr)
        return EXIT_PARTIAL
    print(f"mix: wrote {len(records)} tuples to {out_dir / 'tuples.jsonl'}")
    return EXIT_OK


def cmd_triplets(args) -> int:
    records = pl.read_tuple_manifest(args.tuples)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    triplets = []
    errors = []
    for record in records:
        try:
            triplets.extend(pl.expand_triplets(record))
        except EditForgeError as exc:
            errors.append(pl.RowError(record.tuple_id, type(exc).__name__, str(exc)))
    old_dir = Path(args.tuples).parent
    triplets = [
        pl.EditTriplet(
            **{
                **asdict(t),
                "input_ref": rebase_ref(t.input_ref, old_dir, out_path.parent),
                "output_ref": rebase_ref(t.output_ref, old_dir, out_path.parent),
            }
        )
        for t in sorted(triplets, key=lambda t: t.triplet_id)
    ]
    pl.write_triplet_manifest(triplets, out_path)
    if errors:
        _write_errors(errors, out_path.with_suffix(".errors.jsonl"))
        return EXIT_PARTIAL
    print(f"triplets: wrote {len(triplets)} triplets to {out_path}")
    return EXIT_OK


def cmd_score(args) -> int:
    cfg = _config(args)
    triplets = pl.read_triplet_manifest(args.triplets)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    failures: list[scoring.ItemFailure] = []
    if cfg.scorer == "stub":
        records = [
            scoring.ScoredRecord(t.triplet_id, scoring.stub_score(t, cfg.seed), "stub")
            for t in triplets
        ]
    elif cfg.scorer == "file":
        if not cfg.scores_path:
            raise ConfigError("scorer=file needs --scores")
        records = [
            scoring.ScoredRecord(st.triplet_id, st.scores, "file")
            for st in scoring.join_scores(triplets, scoring.load_scores(cfg.scores_path))
        ]
    elif cfg.scorer == "remote":
        if not cfg.endpoint:
            raise ConfigError("scorer=remote needs --endpoint")
        manifest_path = Path(args.triplets)
        resolver = lambda ref: str(resolve_ref(manifest_path, ref).resolve())  # noqa: E731
        batches = [
            triplets[start : start + scoring.DEFAULT_MAX_BATCH]
            for start in range(0, len(triplets), scoring.DEFAULT_MAX_BATCH)
        ]

        def send(batch):
            return scoring.score_remote(
                cfg.endpoint, batch, bearer_token=cfg.bearer_token, resolve_ref=resolver
            )

        # Batches may fly concurrently; executor.map keeps the result join
        # in input order regardless of completion order.
        if cfg.workers > 1 and len(batches) > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                batch_results = list(pool.map(send, batches))
        else:
            batch_results = [send(batch) for batch in batches]
        records = []
        for items in batch_results:
            for item in items:
                if isinstance(item, scoring.ItemFailure):
                    failures.append(item)
                else:
                    records.append(item)
    else:
        raise ConfigError(f"unknown scorer {cfg.scorer!r}")

    records.sort(key=lambda r: r.triplet_id)
    scoring.write_score_manifest(records, out_path)
    if failures:
        dump_jsonl(out_path.with_suffix(".errors.jsonl"), (asdict(f) for f in failures))
        print(f"score: {len(failures)} items failed", file=sys.stderr)
        return EXIT_PARTIAL
    print(f"score: wrote {len(records)} scores to {out_path}")
    return EXIT_OK


def cmd_filter(args) -> int:
    cfg = _config(args)
    if getattr(args, "per_task", None) is not None:
        from dataclasses import replace

        cfg = replace(cfg, per_task=args.per_task)
    triplets = pl.read_triplet_manifest(args.triplets)
    scores = scoring.load_scores(args.scores)
    scored = scoring.join_scores(triplets, scores)
    survivors, report = run_cascade(scored, cfg.filter_config())

    keep = {s.triplet_id for s in survivors}
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    old_dir = Path(args.triplets).parent
    kept_triplets = [
        pl.EditTriplet(
            **{
                **asdict(t),
                "input_ref": rebase_ref(t.input_ref, old_dir, out_path.parent),
                "output_ref": rebase_ref(t.output_ref, old_dir, out_path.parent),
            }
        )
        for t in sorted(triplets, key=lambda t: t.triplet_id)
        if t.triplet_id in keep
    ]
    pl.write_triplet_manifest(kept_triplets, out_path)
    report_path = Path(args.report) if args.report else out_path.with_suffix(".report.json")
    report.save(report_path)
    print(f"filter: kept {len(kept_triplets)}/{len(triplets)} triplets; "
          f"report at {report_path}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    out = {}
    if args.paired:
        out["correlations"] = correlation_grid(load_paired_manifest(args.paired))
    if args.embeddings:
        ref, ev = (EmbeddingSet(load_matrix(p), p) for p in args.embeddings)
        out["frechet_distance"] = frechet_distance(ref, ev)
    if args.logits:
        ev, ref = (LogitSet(load_matrix(p)) for p in args.logits)
        out["kl_divergence"] = kl_paired(ev, ref)
    if args.is_logits:
        out["inception_score"] = inception_score(LogitSet(load_matrix(args.is_logits)))
    if args.clap:
        audio = load_matrix(args.clap[0])
        text = load_matrix(args.clap[1])
        if audio.shape[0] != text.shape[0]:
            raise ConfigError("--clap matrices must pair rows one-to-one")
        sims = [cosine_similarity_score(a, t) for a, t in zip(audio, text)]
        out["clap_similarity_pct"] = sum(sims) / len(sims)
    if not out:
        raise ConfigError("metrics: give at least one of --paired/--embeddings/"
                          "--logits/--is-logits/--clap")
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", "utf-8")
    print(f"metrics: wrote {out_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    from . import reporting
    from .filtering import FilterReport

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if args.scores:
        written += reporting.render_score_distributions(
            scoring.load_scores(args.scores), out_dir
        )
    if args.filter_report:
        written += reporting.render_filter_funnel(
            FilterReport.load(args.filter_report), out_dir
        )
    if args.paired:
        written += reporting.render_paired_report(
            load_paired_manifest(args.paired), out_dir
        )
    if not written:
        raise ConfigError("report: give at least one of --scores/--filter-report/--paired")
    for path in written:
        print(f"report: wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"editforge: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"editforge: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportFailure as exc:
        print(f"editforge: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except ScoreJoinError as exc:
        print(f"editforge: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except EditForgeError as exc:
        print(f"editforge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
