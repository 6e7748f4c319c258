"""Command-line interface.

Subcommands: simulate, evaluate, run, select, vet, compare, serve.
Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as avio
from .simulation import (
    ScoreModel,
    SyntheticConfig,
    compare_strategies,
    generate,
    oracle_annotator,
    realized_noise_rates,
)
from .vetting import INIT_NONE, ActiveTestingConfig, ActiveTestingSession

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _parse_ks(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"--k expects comma-separated integers, got {text!r}") from None
    if not ks:
        raise ValueError("--k expects at least one value")
    return ks


def _write_out(data: bytes, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(out).write_bytes(data)


def _config_from_args(args: argparse.Namespace) -> ActiveTestingConfig:
    return ActiveTestingConfig(
        strategy=args.strategy,
        batch_size=args.batch_size,
        budget=args.budget,
        ks=_parse_ks(args.k),
        init_policy=args.init_policy,
        init_size=args.init_size,
        init_negatives=args.init_negatives,
        memc_aggregate=args.memc_aggregate,
        pooled_noise=args.pooled_noise,
        seed=args.seed,
    )


def _add_run_config_args(p: argparse.ArgumentParser, default_k: str = "50,100,150") -> None:
    p.add_argument("--strategy", choices=["memc", "random"], default="memc")
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--k", default=default_k, help="comma-separated K values")
    p.add_argument(
        "--init-policy", choices=["none", "random", "positives"], default="random",
        help="how to seed the vetted set before budgeted vetting",
    )
    p.add_argument("--init-size", type=int, default=50)
    p.add_argument("--init-negatives", type=int, default=150)
    p.add_argument("--memc-aggregate", choices=["max", "sum"], default="max")
    p.add_argument("--pooled-noise", action="store_true")
    p.add_argument("--seed", type=int, default=0)


def cmd_simulate(args: argparse.Namespace) -> int:
    config = SyntheticConfig(
        n_pairs=args.pairs,
        n_relations=args.relations,
        positive_rate=args.positive_rate,
        false_negative_rate=args.fn_rate,
        false_positive_rate=args.fp_rate,
        multi_relation_rate=args.multi_relation_rate,
        score_model=ScoreModel(
            base=args.score_base,
            separation=args.score_separation,
            noise_scale=args.score_noise,
        ),
        seed=args.seed,
    )
    dataset = generate(config)
    avio.save_dataset(dataset, args.out)
    summary = realized_noise_rates(dataset)
    print(
        f"wrote {dataset.n_pairs} pairs x {dataset.n_relations} relations to {args.out}"
        f" (cell FN rate {summary.cell_fn_rate:.4f},"
        f" pair FN rate {summary.pair_fn_rate:.4f})",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    ks = _parse_ks(args.k)
    if args.session:
        handle = avio.load_session(args.session, dataset_path=args.dataset)
        report = handle.session.report(ks=ks)
    else:
        if not args.dataset:
            raise ValueError("--dataset is required without --session")
        dataset = avio.load_dataset(args.dataset, clamp=args.clamp)
        config = ActiveTestingConfig(ks=ks, init_policy=INIT_NONE, budget=0)
        session = ActiveTestingSession.create(dataset, config)
        report = session.report()
    _write_out(avio.emit_report(report, args.format), args.out)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    if args.resume:
        handle = avio.load_session(args.session_out, dataset_path=args.dataset)
    else:
        config = _config_from_args(args)
        dataset = avio.load_dataset(args.dataset, clamp=args.clamp)
        if not dataset.has_oracle():
            raise ValueError(
                "run drives the loop with the oracle annotator;"
                " the dataset must carry oracle labels"
            )
        annotator = oracle_annotator(dataset)
        handle = avio.create_session(
            args.dataset, config, args.session_out, annotator=annotator, clamp=args.clamp
        )
    annotator = oracle_annotator(handle.session.dataset)
    handle.session.run(annotator, max_iterations=args.max_iterations)
    handle.save()
    report = handle.session.report()
    _write_out(avio.emit_report(report, args.format), args.report_out)
    return EXIT_OK


def cmd_select(args: argparse.Namespace) -> int:
    session_path = Path(args.session)
    if session_path.exists():
        handle = avio.load_session(session_path, dataset_path=args.dataset)
    else:
        if not args.dataset:
            raise ValueError("--dataset is required when creating a new session")
        config = _config_from_args(args)
        if config.init_policy != INIT_NONE:
            raise ValueError(
                "external-annotation sessions must use --init-policy none;"
                " seed labels would need an annotator"
            )
        handle = avio.create_session(args.dataset, config, session_path, clamp=args.clamp)
    view = avio.session_view(handle)
    payload = {
        "session_id": view["session_id"],
        "batch_id": view["batch_id"],
        "budget_remaining": view["budget_remaining"],
        "relations": view["relations"],
        "batch": view["batch"],
    }
    _write_out((json.dumps(payload, sort_keys=True, indent=2) + "\n").encode(), args.out)
    return EXIT_OK


def cmd_vet(args: argparse.Namespace) -> int:
    handle = avio.load_session(args.session, dataset_path=args.dataset)
    try:
        doc = json.loads(Path(args.labels).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"labels file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "labels" not in doc:
        raise ValueError('labels file must be an object with a "labels" field')
    batch_id = doc.get("batch_id")
    if batch_id != handle.session.batch_token():
        raise ValueError(
            f"stale or missing batch_id {batch_id!r}; expected"
            f" {handle.session.batch_token()!r} (state unchanged)"
        )
    record = handle.session.apply_batch(doc["labels"])
    handle.save()
    print(
        f"iteration {record.iteration}: vetted {len(record.batch)} pairs,"
        f" budget remaining {handle.session.state.budget_remaining}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    syn = SyntheticConfig(
        **{
            **doc.get("synthetic", {}),
            "score_model": ScoreModel(**doc.get("synthetic", {}).get("score_model", {}))
            if "score_model" in doc.get("synthetic", {})
            else ScoreModel(),
        }
    )
    run_config = avio.config_from_dict(
        {**avio.config_to_dict(ActiveTestingConfig()), **doc.get("run", {})}
    )
    strategies = doc.get("strategies", ["memc", "random"])
    budgets = doc.get("budgets", [run_config.budget])
    comparison = compare_strategies(
        syn, strategies, budgets, n_seeds=args.seeds, run_config=run_config
    )
    rows = [
        {
            "strategy": r.strategy,
            "budget": r.budget,
            "seed": r.seed,
            "distance_to_oracle": r.distance_to_oracle,
            "p_at_k_abs_error": {str(k): v for k, v in sorted(r.p_at_k_abs_error.items())},
        }
        for r in comparison.rows
    ]
    means = [
        {
            "strategy": s,
            "budget": b,
            "mean_distance": comparison.mean_distance(s, b),
        }
        for s in strategies
        for b in sorted(set(budgets))
    ]
    if args.format == "json":
        out = json.dumps({"rows": rows, "means": means}, sort_keys=True, indent=2) + "\n"
        _write_out(out.encode(), args.out)
    else:
        import csv as _csv
        import io as _io

        buf = _io.StringIO()
        writer = _csv.writer(buf, lineterminator="\n")
        writer.writerow(["strategy", "budget", "seed", "distance_to_oracle"])
        for r in comparison.rows:
            writer.writerow([r.strategy, r.budget, r.seed, repr(r.distance_to_oracle)])
        writer.writerow([])
        writer.writerow(["strategy", "budget", "mean_distance"])
        for m in means:
            writer.writerow([m["strategy"], m["budget"], repr(m["mean_distance"])])
        _write_out(buf.getvalue().encode(), args.out)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    session_path = Path(args.session)
    if session_path.exists():
        handle = avio.load_session(session_path, dataset_path=args.dataset)
    else:
        if not args.dataset:
            raise ValueError("--dataset is required when creating a new session")
        config = _config_from_args(args)
        if config.init_policy != INIT_NONE:
            raise ValueError("live sessions must use --init-policy none")
        handle = avio.create_session(args.dataset, config, session_path, clamp=args.clamp)
    app = create_app(handle, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="activeval",
        description="Active testing of classifiers scored against noisy test sets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic noisy-labeled dataset")
    p.add_argument("--pairs", type=int, default=500)
    p.add_argument("--relations", type=int, default=5)
    p.add_argument("--positive-rate", type=float, default=0.212)
    p.add_argument("--fn-rate", type=float, default=0.0875)
    p.add_argument("--fp-rate", type=float, default=0.0)
    p.add_argument("--multi-relation-rate", type=float, default=0.05)
    p.add_argument("--score-base", type=float, default=-2.0)
    p.add_argument("--score-separation", type=float, default=4.0)
    p.add_argument("--score-noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="one-shot held-out/expected/oracle metrics")
    p.add_argument("--dataset")
    p.add_argument("--session")
    p.add_argument("--k", default="50,100,150")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--clamp", action="store_true", help="clamp boundary scores into (0,1)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full vet-estimate loop with the oracle annotator")
    p.add_argument("--dataset", required=True)
    _add_run_config_args(p)
    p.add_argument("--session-out", required=True)
    p.add_argument("--report-out")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--clamp", action="store_true")
    p.add_argument("--max-iterations", type=int, default=None,
                   help="stop after this many batches (session stays resumable)")
    p.add_argument("--resume", action="store_true",
                   help="continue a previously saved session")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("select", help="emit the next batch for external annotation")
    p.add_argument("--session", required=True)
    p.add_argument("--dataset")
    _add_run_config_args(p)
    p.add_argument("--clamp", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("vet", help="ingest externally produced annotations")
    p.add_argument("--session", required=True)
    p.add_argument("--dataset")
    p.add_argument("--labels", required=True,
                   help='JSON file: {"batch_id": ..., "labels": {pair: {relation: 0|1}}}')
    p.set_defaults(func=cmd_vet)

    p = sub.add_parser("compare", help="strategy sweep on synthetic data")
    p.add_argument("--config", required=True,
                   help="JSON file with synthetic/run/strategies/budgets settings")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="serve a live annotation session over HTTP")
    p.add_argument("--session", required=True)
    p.add_argument("--dataset")
    _add_run_config_args(p)
    p.add_argument("--clamp", action="store_true")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--ui-dir", help="directory with the built annotation UI to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
