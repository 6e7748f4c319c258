"""File formats: line-delimited datasets, session persistence, report emission.

All output is deterministic and platform-independent: keys are sorted,
line endings are always "\\n", and floats round-trip exactly through
shortest-repr serialization.  Sessions are bound to their dataset file by
content hash so a resumed run cannot silently drift onto different labels.
"""

from __future__ import annotations

import hashlib
import io as _stdio
import json
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .data import EntityPair, PredictionDataset, clamp_score
from .metrics import MetricReport, PrCurve
from .vetting import (
    ActiveTestingConfig,
    ActiveTestingSession,
    Annotator,
    EvaluationReport,
    IterationRecord,
    VettingState,
)

DATASET_FORMAT = "activeval-dataset"
DATASET_VERSION = 1
SESSION_FORMAT = "activeval-session"
SESSION_VERSION = 1


class DatasetFormatError(ValueError):
    """Malformed dataset file; message names the offending line and field."""


class SessionFormatError(ValueError):
    """Malformed or mismatched session file."""


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ": "))


# -- dataset files ---------------------------------------------------------


def dataset_to_bytes(dataset: PredictionDataset) -> bytes:
    header = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "relations": list(dataset.relations),
    }
    lines = [_dumps(header)]
    for pair in dataset.pairs:
        record: dict[str, Any] = {
            "pair_id": pair.pair_id,
            "head": pair.head,
            "tail": pair.tail,
            "scores": dict(pair.scores),
            "noisy_labels": dict(pair.noisy_labels),
        }
        if pair.sentences is not None:
            record["sentences"] = list(pair.sentences)
        if pair.oracle_labels is not None:
            record["oracle_labels"] = dict(pair.oracle_labels)
        lines.append(_dumps(record))
    return ("\n".join(lines) + "\n").encode("utf-8")


def save_dataset(dataset: PredictionDataset, path: str | Path) -> None:
    Path(path).write_bytes(dataset_to_bytes(dataset))


def _parse_label_map(
    raw: Any, relations: list[str], line_no: int, field_name: str, pair_id: str
) -> dict[str, int]:
    if not isinstance(raw, dict):
        raise DatasetFormatError(f"line {line_no}: field {field_name!r} must be an object")
    known = set(relations)
    for rel in raw:
        if rel not in known:
            raise DatasetFormatError(
                f"line {line_no}: field {field_name!r} uses relation {rel!r}"
                " not declared in the header"
            )
    out: dict[str, int] = {}
    for rel in relations:
        if rel not in raw:
            raise DatasetFormatError(
                f"line {line_no}: pair {pair_id!r} is missing relation {rel!r}"
                f" in field {field_name!r}"
            )
        v = raw[rel]
        if v not in (0, 1):
            raise DatasetFormatError(
                f"line {line_no}: field {field_name!r}, relation {rel!r}:"
                f" label must be 0 or 1, got {v!r}"
            )
        out[rel] = int(v)
    return out


def load_dataset(path: str | Path, clamp: bool = False) -> PredictionDataset:
    """Parse and validate a line-delimited dataset file.

    With ``clamp=True`` scores are clamped into [1e-6, 1 - 1e-6] instead of
    rejecting values at the boundary.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.replace("\r\n", "\n").split("\n")
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise DatasetFormatError("line 1: empty dataset file")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"line 1: invalid JSON header ({exc})") from exc
    if not isinstance(header, dict) or header.get("format") != DATASET_FORMAT:
        raise DatasetFormatError(
            f"line 1: expected a header record with format={DATASET_FORMAT!r}"
        )
    if header.get("version") != DATASET_VERSION:
        raise DatasetFormatError(
            f"line 1: unsupported dataset version {header.get('version')!r}"
        )
    relations = header.get("relations")
    if not isinstance(relations, list) or not all(isinstance(r, str) for r in relations):
        raise DatasetFormatError("line 1: header field 'relations' must be a list of strings")

    pairs: list[EntityPair] = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines[1:], start=2):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"line {line_no}: invalid JSON ({exc})") from exc
        if not isinstance(record, dict):
            raise DatasetFormatError(f"line {line_no}: record must be an object")
        pair_id = record.get("pair_id")
        if not isinstance(pair_id, str) or not pair_id:
            raise DatasetFormatError(f"line {line_no}: field 'pair_id' must be a non-empty string")
        if pair_id in seen:
            raise DatasetFormatError(f"line {line_no}: duplicate pair_id {pair_id!r}")
        seen.add(pair_id)

        raw_scores = record.get("scores")
        if not isinstance(raw_scores, dict):
            raise DatasetFormatError(f"line {line_no}: field 'scores' must be an object")
        for rel in raw_scores:
            if rel not in set(relations):
                raise DatasetFormatError(
                    f"line {line_no}: field 'scores' uses relation {rel!r}"
                    " not declared in the header"
                )
        scores: dict[str, float] = {}
        for rel in relations:
            if rel not in raw_scores:
                raise DatasetFormatError(
                    f"line {line_no}: pair {pair_id!r} is missing relation {rel!r}"
                    " in field 'scores'"
                )
            try:
                s = float(raw_scores[rel])
            except (TypeError, ValueError):
                raise DatasetFormatError(
                    f"line {line_no}: field 'scores', relation {rel!r}: not a number"
                ) from None
            if clamp:
                s = clamp_score(s)
            if not np.isfinite(s) or not 0.0 < s < 1.0:
                raise DatasetFormatError(
                    f"line {line_no}: field 'scores', relation {rel!r}:"
                    f" score {raw_scores[rel]!r} outside the open interval (0, 1)"
                )
            scores[rel] = s

        noisy = _parse_label_map(
            record.get("noisy_labels"), relations, line_no, "noisy_labels", pair_id
        )
        oracle = None
        if record.get("oracle_labels") is not None:
            oracle = _parse_label_map(
                record["oracle_labels"], relations, line_no, "oracle_labels", pair_id
            )
        sentences = record.get("sentences")
        if sentences is not None and (
            not isinstance(sentences, list) or not all(isinstance(s, str) for s in sentences)
        ):
            raise DatasetFormatError(
                f"line {line_no}: field 'sentences' must be a list of strings"
            )
        pairs.append(
            EntityPair(
                pair_id=pair_id,
                head=str(record.get("head", "")),
                tail=str(record.get("tail", "")),
                scores=scores,
                noisy_labels=noisy,
                oracle_labels=oracle,
                sentences=tuple(sentences) if sentences is not None else None,
            )
        )
    try:
        return PredictionDataset(pairs=tuple(pairs), relations=tuple(relations))
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from exc


def dataset_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- metric / report serialization ------------------------------------------


def metric_report_to_dict(report: MetricReport) -> dict[str, Any]:
    return {
        "source": report.source,
        "p_at_k": {str(k): v for k, v in sorted(report.p_at_k.items())},
        "r_at_k": {str(k): v for k, v in sorted(report.r_at_k.items())},
        "curve": {
            "recall": report.curve.recall.tolist(),
            "precision": report.curve.precision.tolist(),
        },
    }


def metric_report_from_dict(d: dict[str, Any]) -> MetricReport:
    return MetricReport(
        source=d["source"],
        p_at_k={int(k): float(v) for k, v in d["p_at_k"].items()},
        r_at_k={int(k): float(v) for k, v in d["r_at_k"].items()},
        curve=PrCurve(
            recall=np.asarray(d["curve"]["recall"], dtype=np.float64),
            precision=np.asarray(d["curve"]["precision"], dtype=np.float64),
        ),
    )


def iteration_record_to_dict(record: IterationRecord) -> dict[str, Any]:
    return {
        "iteration": record.iteration,
        "batch": list(record.batch),
        "metrics": metric_report_to_dict(record.metrics),
        "noise_summary": {rel: list(v) for rel, v in sorted(record.noise_summary.items())},
        "distance_to_oracle": record.distance_to_oracle,
    }


def iteration_record_from_dict(d: dict[str, Any]) -> IterationRecord:
    return IterationRecord(
        iteration=int(d["iteration"]),
        batch=tuple(d["batch"]),
        metrics=metric_report_from_dict(d["metrics"]),
        noise_summary={rel: (float(v[0]), float(v[1])) for rel, v in d["noise_summary"].items()},
        distance_to_oracle=(
            None if d.get("distance_to_oracle") is None else float(d["distance_to_oracle"])
        ),
    )


def report_to_dict(report: EvaluationReport, include_oracle: bool = True) -> dict[str, Any]:
    iterations = []
    for record in report.history:
        d = iteration_record_to_dict(record)
        if not include_oracle:
            d["distance_to_oracle"] = None
        iterations.append(d)
    distances = dict(report.distances)
    if not include_oracle:
        distances = {k: v for k, v in distances.items() if "oracle" not in k}
    return {
        "ks": list(report.ks),
        "expected": metric_report_to_dict(report.expected),
        "initial_expected": metric_report_to_dict(report.initial_expected),
        "held_out": None if report.held_out is None else metric_report_to_dict(report.held_out),
        "oracle": (
            metric_report_to_dict(report.oracle)
            if include_oracle and report.oracle is not None
            else None
        ),
        "distances": distances,
        "iterations": iterations,
    }


def emit_report(
    report: EvaluationReport, format: str = "json", include_oracle: bool = True
) -> bytes:
    """Serialize an evaluation report with stable field ordering.

    JSON carries the full structure; CSV flattens it into typed rows
    (P@K values, PR-curve points, distances, per-iteration trace).
    """
    if format == "json":
        return (_dumps(report_to_dict(report, include_oracle)) + "\n").encode("utf-8")
    if format == "csv":
        return _report_to_csv(report, include_oracle)
    raise ValueError(f"unknown report format {format!r}")


def _report_to_csv(report: EvaluationReport, include_oracle: bool) -> bytes:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["section", "source", "iteration", "k", "rank", "recall", "precision", "value"]
    )
    sources = [("expected", report.expected), ("initial_expected", report.initial_expected)]
    if report.held_out is not None:
        sources.append(("held_out", report.held_out))
    if include_oracle and report.oracle is not None:
        sources.append(("oracle", report.oracle))
    for name, metric in sources:
        for k in sorted(metric.p_at_k):
            writer.writerow(["p_at_k", name, "", k, "", "", "", repr(metric.p_at_k[k])])
        for k in sorted(metric.r_at_k):
            writer.writerow(["r_at_k", name, "", k, "", "", "", repr(metric.r_at_k[k])])
    for name, metric in sources:
        recall = metric.curve.recall
        precision = metric.curve.precision
        for i in range(len(recall)):
            writer.writerow(
                ["pr_curve", name, "", "", i + 1, repr(float(recall[i])),
                 repr(float(precision[i])), ""]
            )
    distances = report.distances
    if not include_oracle:
        distances = {k: v for k, v in distances.items() if "oracle" not in k}
    for name in sorted(distances):
        writer.writerow(["distance", name, "", "", "", "", "", repr(distances[name])])
    for record in report.history:
        for k in sorted(record.metrics.p_at_k):
            writer.writerow(
                ["iteration_p_at_k", "expected", record.iteration, k, "", "", "",
                 repr(record.metrics.p_at_k[k])]
            )
        if include_oracle and record.distance_to_oracle is not None:
            writer.writerow(
                ["iteration_distance", "expected_vs_oracle", record.iteration, "", "", "",
                 "", repr(record.distance_to_oracle)]
            )
    return buf.getvalue().encode("utf-8")


# -- session persistence -----------------------------------------------------


def config_to_dict(config: ActiveTestingConfig) -> dict[str, Any]:
    return {
        "strategy": config.strategy,
        "batch_size": config.batch_size,
        "budget": config.budget,
        "ks": list(config.ks),
        "init_policy": config.init_policy,
        "init_size": config.init_size,
        "init_negatives": config.init_negatives,
        "memc_aggregate": config.memc_aggregate,
        "pooled_noise": config.pooled_noise,
        "seed": config.seed,
    }


def config_from_dict(d: dict[str, Any]) -> ActiveTestingConfig:
    return ActiveTestingConfig(
        strategy=d["strategy"],
        batch_size=int(d["batch_size"]),
        budget=int(d["budget"]),
        ks=tuple(int(k) for k in d["ks"]),
        init_policy=d["init_policy"],
        init_size=int(d["init_size"]),
        init_negatives=int(d["init_negatives"]),
        memc_aggregate=d["memc_aggregate"],
        pooled_noise=bool(d["pooled_noise"]),
        seed=int(d["seed"]),
    )


def session_id_for(dataset_sha: str, config: ActiveTestingConfig) -> str:
    payload = dataset_sha + "|" + _dumps(config_to_dict(config))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


@dataclass
class SessionHandle:
    """A live session bound to its on-disk file and dataset source."""

    session: ActiveTestingSession
    path: Path
    dataset_path: str
    dataset_sha256: str
    clamp: bool = False

    @property
    def session_id(self) -> str:
        return session_id_for(self.dataset_sha256, self.session.config)

    def save(self) -> None:
        save_session(self)


def create_session(
    dataset_path: str | Path,
    config: ActiveTestingConfig,
    session_path: str | Path,
    annotator: Annotator | None = None,
    clamp: bool = False,
    save: bool = True,
) -> SessionHandle:
    """Start a new session from a dataset file and persist it."""
    dataset = load_dataset(dataset_path, clamp=clamp)
    session = ActiveTestingSession.create(dataset, config, annotator)
    handle = SessionHandle(
        session=session,
        path=Path(session_path),
        dataset_path=str(dataset_path),
        dataset_sha256=dataset_sha256(dataset_path),
        clamp=clamp,
    )
    if save:
        handle.save()
    return handle


def save_session(handle: SessionHandle) -> None:
    session = handle.session
    state = session.state
    doc = {
        "format": SESSION_FORMAT,
        "version": SESSION_VERSION,
        "session_id": handle.session_id,
        "dataset_path": handle.dataset_path,
        "dataset_sha256": handle.dataset_sha256,
        "dataset_clamp": handle.clamp,
        "config": config_to_dict(session.config),
        "rng_state": _rng_state_to_jsonable(session.rng_checkpoint),
        "initial_expected": metric_report_to_dict(session.initial_expected),
        "state": {
            "unvetted": sorted(state.unvetted),
            "vetted": {
                pid: {rel: int(v) for rel, v in sorted(labels.items())}
                for pid, labels in sorted(state.vetted.items())
            },
            "budget_remaining": state.budget_remaining,
            "initial_budget": state.initial_budget,
            "history": [iteration_record_to_dict(r) for r in state.history],
        },
    }
    handle.path.write_bytes((_dumps(doc) + "\n").encode("utf-8"))


def load_session(path: str | Path, dataset_path: str | Path | None = None) -> SessionHandle:
    """Reload a persisted session and verify it still matches its dataset.

    ``dataset_path`` overrides the stored location (the content hash must
    still match).
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SessionFormatError(f"invalid session file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != SESSION_FORMAT:
        raise SessionFormatError(f"not a {SESSION_FORMAT} file")
    if doc.get("version") != SESSION_VERSION:
        raise SessionFormatError(f"unsupported session version {doc.get('version')!r}")

    resolved = Path(dataset_path) if dataset_path is not None else Path(doc["dataset_path"])
    actual_sha = dataset_sha256(resolved)
    if actual_sha != doc["dataset_sha256"]:
        raise SessionFormatError(
            f"dataset hash mismatch: session expects {doc['dataset_sha256'][:12]}..,"
            f" file {resolved} has {actual_sha[:12]}..; refusing to resume"
        )
    clamp = bool(doc.get("dataset_clamp", False))
    dataset = load_dataset(resolved, clamp=clamp)
    config = config_from_dict(doc["config"])

    sd = doc["state"]
    state = VettingState(
        unvetted=set(sd["unvetted"]),
        vetted={
            pid: {rel: int(v) for rel, v in labels.items()}
            for pid, labels in sd["vetted"].items()
        },
        budget_remaining=int(sd["budget_remaining"]),
        initial_budget=int(sd["initial_budget"]),
        history=[iteration_record_from_dict(r) for r in sd["history"]],
    )
    state.check_invariants(dataset)

    rng = np.random.default_rng(0)
    rng.bit_generator.state = _rng_state_from_jsonable(doc["rng_state"])
    session = ActiveTestingSession(
        dataset,
        config,
        state,
        rng,
        initial_expected=metric_report_from_dict(doc["initial_expected"]),
    )
    return SessionHandle(
        session=session,
        path=Path(path),
        dataset_path=str(doc["dataset_path"]) if dataset_path is None else str(dataset_path),
        dataset_sha256=actual_sha,
        clamp=clamp,
    )


# -- session views -----------------------------------------------------------


def session_view(handle: SessionHandle) -> dict[str, Any]:
    """Serializable snapshot of a live session for annotation clients.

    Never includes oracle labels, even when the underlying dataset has
    them: annotators must not see the answer key.
    """
    session = handle.session
    dataset = session.dataset
    batch = []
    for pair_id in session.pending_batch:
        pair = dataset.pair(pair_id)
        batch.append(
            {
                "pair_id": pair.pair_id,
                "head": pair.head,
                "tail": pair.tail,
                "sentences": list(pair.sentences) if pair.sentences is not None else [],
                "relations": [
                    {
                        "relation": rel,
                        "score": pair.scores[rel],
                        "noisy_label": pair.noisy_labels[rel],
                    }
                    for rel in dataset.relations
                ],
            }
        )
    return {
        "session_id": handle.session_id,
        "iteration": session.iteration,
        "budget_remaining": session.state.budget_remaining,
        "budget_initial": session.state.initial_budget,
        "done": session.done,
        "ks": list(session.config.ks),
        "relations": list(dataset.relations),
        "batch_id": session.batch_token(),
        "batch": batch,
        "metrics": metric_report_to_dict(
            session.state.history[-1].metrics
            if session.state.history
            else session.initial_expected
        ),
        "history": [
            {
                "iteration": r.iteration,
                "batch_size": len(r.batch),
                "p_at_k": {str(k): v for k, v in sorted(r.metrics.p_at_k.items())},
                "r_at_k": {str(k): v for k, v in sorted(r.metrics.r_at_k.items())},
            }
            for r in session.state.history
        ],
    }


def _rng_state_to_jsonable(state: dict[str, Any]) -> dict[str, Any]:
    def convert(v: Any) -> Any:
        if isinstance(v, dict):
            return {k: convert(x) for k, x in v.items()}
        if isinstance(v, (np.integer,)):
            return int(v)
        return v

    return convert(state)


def _rng_state_from_jsonable(state: dict[str, Any]) -> dict[str, Any]:
    return state
