import json

import numpy as np
import pytest

from activeval import io as avio
from activeval.simulation import SyntheticConfig, generate, oracle_annotator
from activeval.vetting import ActiveTestingConfig
from conftest import build_dataset


@pytest.fixture
def dataset():
    return generate(SyntheticConfig(n_pairs=40, n_relations=3, seed=1))


@pytest.fixture
def dataset_path(tmp_path, dataset):
    path = tmp_path / "dataset.jsonl"
    avio.save_dataset(dataset, path)
    return path


def test_dataset_roundtrip(dataset, dataset_path):
    loaded = avio.load_dataset(dataset_path)
    assert loaded.relations == dataset.relations
    assert loaded.pair_ids == dataset.pair_ids
    for a, b in zip(loaded.pairs, dataset.pairs):
        assert a.scores == b.scores
        assert a.noisy_labels == b.noisy_labels
        assert a.oracle_labels == b.oracle_labels
    # bytes are stable through a save/load/save cycle
    assert avio.dataset_to_bytes(loaded) == dataset_path.read_bytes()


def test_load_rejects_score_at_boundary_with_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    header = {"format": "activeval-dataset", "version": 1, "relations": ["r1"]}
    good = {"pair_id": "A", "head": "h", "tail": "t",
            "scores": {"r1": 0.5}, "noisy_labels": {"r1": 0}}
    bad = {"pair_id": "B", "head": "h", "tail": "t",
           "scores": {"r1": 1.0}, "noisy_labels": {"r1": 0}}
    path.write_text("\n".join(json.dumps(r) for r in [header, good, bad]) + "\n")
    with pytest.raises(avio.DatasetFormatError, match="line 3"):
        avio.load_dataset(path)
    # the clamp flag rescues boundary scores
    ds = avio.load_dataset(path, clamp=True)
    assert ds.pair("B").scores["r1"] == pytest.approx(1.0 - 1e-6)


def test_load_rejects_undeclared_relation(tmp_path):
    path = tmp_path / "bad.jsonl"
    header = {"format": "activeval-dataset", "version": 1, "relations": ["r1", "r2"]}
    bad = {"pair_id": "A", "head": "h", "tail": "t",
           "scores": {"r1": 0.5, "r2": 0.5, "r3": 0.5},
           "noisy_labels": {"r1": 0, "r2": 0}}
    path.write_text("\n".join(json.dumps(r) for r in [header, bad]) + "\n")
    with pytest.raises(avio.DatasetFormatError, match="r3"):
        avio.load_dataset(path)


def test_load_rejects_missing_relation_and_duplicates(tmp_path):
    path = tmp_path / "bad.jsonl"
    header = {"format": "activeval-dataset", "version": 1, "relations": ["r1", "r2"]}
    missing = {"pair_id": "A", "head": "h", "tail": "t",
               "scores": {"r1": 0.5}, "noisy_labels": {"r1": 0, "r2": 0}}
    path.write_text("\n".join(json.dumps(r) for r in [header, missing]) + "\n")
    with pytest.raises(avio.DatasetFormatError, match="line 2.*missing relation 'r2'"):
        avio.load_dataset(path)

    rec = {"pair_id": "A", "head": "h", "tail": "t",
           "scores": {"r1": 0.5, "r2": 0.5}, "noisy_labels": {"r1": 0, "r2": 0}}
    path.write_text("\n".join(json.dumps(r) for r in [header, rec, rec]) + "\n")
    with pytest.raises(avio.DatasetFormatError, match="line 3.*duplicate"):
        avio.load_dataset(path)


def test_load_ignores_unknown_fields(tmp_path):
    path = tmp_path / "extra.jsonl"
    header = {"format": "activeval-dataset", "version": 1, "relations": ["r1"],
              "comment": "ignored"}
    rec = {"pair_id": "A", "head": "h", "tail": "t", "scores": {"r1": 0.5},
           "noisy_labels": {"r1": 1}, "annotator_notes": "also ignored"}
    path.write_text("\n".join(json.dumps(r) for r in [header, rec]) + "\n")
    ds = avio.load_dataset(path)
    assert ds.pair("A").noisy_labels == {"r1": 1}


def test_load_rejects_wrong_header(tmp_path):
    path = tmp_path / "nohdr.jsonl"
    path.write_text(json.dumps({"pair_id": "A"}) + "\n")
    with pytest.raises(avio.DatasetFormatError, match="header"):
        avio.load_dataset(path)


def test_session_roundtrip_and_hash_binding(tmp_path, dataset_path):
    cfg = ActiveTestingConfig(budget=10, batch_size=5, ks=(5, 10), init_size=5, seed=3)
    dataset = avio.load_dataset(dataset_path)
    annotator = oracle_annotator(dataset)
    session_path = tmp_path / "session.json"
    handle = avio.create_session(dataset_path, cfg, session_path, annotator=annotator)
    handle.session.run(annotator, max_iterations=1)
    handle.save()

    loaded = avio.load_session(session_path)
    assert loaded.session.state.vetted == handle.session.state.vetted
    assert loaded.session.state.budget_remaining == handle.session.state.budget_remaining
    assert loaded.session.pending_batch == handle.session.pending_batch
    assert loaded.session.batch_token() == handle.session.batch_token()
    assert loaded.session_id == handle.session_id

    # tampering with the dataset file must block resumption
    other = generate(SyntheticConfig(n_pairs=40, n_relations=3, seed=99))
    avio.save_dataset(other, dataset_path)
    with pytest.raises(avio.SessionFormatError, match="hash mismatch"):
        avio.load_session(session_path)


@pytest.mark.parametrize("strategy", ["memc", "random"])
def test_resumed_session_equals_uninterrupted(tmp_path, dataset_path, strategy):
    cfg = ActiveTestingConfig(
        strategy=strategy, budget=20, batch_size=5, ks=(5, 10), init_size=5, seed=7
    )
    dataset = avio.load_dataset(dataset_path)
    annotator = oracle_annotator(dataset)

    full = avio.create_session(dataset_path, cfg, tmp_path / "full.json", annotator=annotator)
    full.session.run(annotator)
    full.save()

    part = avio.create_session(dataset_path, cfg, tmp_path / "part.json", annotator=annotator)
    part.session.run(annotator, max_iterations=2)
    part.save()
    resumed = avio.load_session(tmp_path / "part.json")
    resumed.session.run(annotator)
    resumed.save()

    assert (tmp_path / "full.json").read_bytes() == (tmp_path / "part.json").read_bytes()
    assert avio.report_to_dict(full.session.report()) == avio.report_to_dict(
        resumed.session.report()
    )


def test_emit_report_json_roundtrip(dataset_path, tmp_path):
    cfg = ActiveTestingConfig(budget=10, batch_size=5, ks=(5, 10), init_size=5, seed=3)
    dataset = avio.load_dataset(dataset_path)
    annotator = oracle_annotator(dataset)
    handle = avio.create_session(dataset_path, cfg, tmp_path / "s.json", annotator=annotator)
    handle.session.run(annotator)
    report = handle.session.report()

    data = avio.emit_report(report, "json")
    parsed = json.loads(data)
    assert parsed == avio.report_to_dict(report)
    assert parsed["ks"] == [5, 10]
    assert [row["iteration"] for row in parsed["iterations"]] == [1, 2]
    # floats survive the trip exactly
    assert parsed["expected"]["p_at_k"]["10"] == report.expected.p_at_k[10]


def test_emit_report_csv_shape(dataset_path, tmp_path):
    cfg = ActiveTestingConfig(budget=0, ks=(5, 10, 15), init_policy="none")
    dataset = avio.load_dataset(dataset_path)
    handle = avio.create_session(dataset_path, cfg, tmp_path / "s.json")
    report = handle.session.report()
    lines = avio.emit_report(report, "csv").decode().splitlines()
    header = lines[0].split(",")
    assert header[:4] == ["section", "source", "iteration", "k"]
    p_rows = [ln for ln in lines if ln.startswith("p_at_k,expected")]
    assert [row.split(",")[3] for row in p_rows] == ["5", "10", "15"]
    # budget 0: no iteration rows, but the report is still well-formed
    assert not [ln for ln in lines if ln.startswith("iteration")]


def test_emit_report_hides_oracle_when_asked(dataset_path, tmp_path):
    cfg = ActiveTestingConfig(budget=5, batch_size=5, ks=(5,), init_policy="none")
    dataset = avio.load_dataset(dataset_path)
    annotator = oracle_annotator(dataset)
    handle = avio.create_session(dataset_path, cfg, tmp_path / "s.json", annotator=annotator)
    handle.session.run(annotator)
    report = handle.session.report()
    public = json.loads(avio.emit_report(report, "json", include_oracle=False))
    assert public["oracle"] is None
    assert all("oracle" not in k for k in public["distances"])
    assert all(row["distance_to_oracle"] is None for row in public["iterations"])
    private = json.loads(avio.emit_report(report, "json"))
    assert private["oracle"] is not None


def test_session_view_never_contains_oracle_labels(dataset_path, tmp_path):
    cfg = ActiveTestingConfig(budget=10, batch_size=5, ks=(5,), init_policy="none")
    handle = avio.create_session(dataset_path, cfg, tmp_path / "s.json")
    view = avio.session_view(handle)
    assert len(view["batch"]) == 5
    assert "oracle" not in json.dumps(view)
    for entry in view["batch"]:
        assert set(entry) == {"pair_id", "head", "tail", "sentences", "relations"}
        for rel in entry["relations"]:
            assert set(rel) == {"relation", "score", "noisy_label"}
