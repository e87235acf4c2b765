"""Command-line workflow: subcommands, exit codes, and file outputs."""

import argparse
import json

import pytest

from pairshot.cli import _parse_option, build_parser, main
from pairshot.data import load_dataset
from pairshot.ingestion.mock_server import MockBugzillaServer, make_fixture_bugs


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Datasets produced by the ingest and split subcommands, shared downstream."""
    root = tmp_path_factory.mktemp("cli")
    rc = main(
        [
            "ingest", "synthetic",
            "--task", "so_duplicate",
            "--pairs", "120",
            "--unlabeled", "60",
            "--seed", "3",
            "--out", str(root / "data"),
        ]
    )
    assert rc == 0
    rc = main(
        [
            "split",
            "--data", str(root / "data" / "so_duplicate.pool.jsonl"),
            "--train-pool", "80",
            "--test", "30",
            "--seed", "5",
            "--out", str(root / "splits"),
        ]
    )
    assert rc == 0
    return {
        "root": root,
        "pool": root / "splits" / "so_duplicate.pool.train_pool.jsonl",
        "test": root / "splits" / "so_duplicate.pool.test.jsonl",
        "unlabeled": root / "data" / "so_duplicate.unlabeled.jsonl",
    }


class TestIngestAndSplit:
    def test_ingest_writes_pool_and_unlabeled(self, workspace):
        """The synthetic ingest writes a labeled pool and an unlabeled file."""
        data = workspace["root"] / "data"
        pool = load_dataset(data / "so_duplicate.pool.jsonl")
        unlabeled = load_dataset(workspace["unlabeled"])
        assert len(pool) == 120
        assert pool.label_set.labels == ("Neutral", "Duplicate")
        assert len(unlabeled) == 60
        assert unlabeled.kind == "unlabeled"

    def test_split_produces_disjoint_sized_parts(self, workspace):
        pool = load_dataset(workspace["pool"])
        test = load_dataset(workspace["test"])
        assert len(pool) == 80
        assert len(test) == 30
        pool_sentences = {s for e in pool for s in (e.pair.u, e.pair.v)}
        test_sentences = {s for e in test for s in (e.pair.u, e.pair.v)}
        assert pool_sentences.isdisjoint(test_sentences)


class TestTrain:
    def test_train_writes_report_and_prints_metrics(self, workspace, capsys):
        """Training emits a one-line metric summary and a JSON report file."""
        out = workspace["root"] / "train-out"
        rc = main(
            [
                "train",
                "--method", "finetune",
                "--train", str(workspace["pool"]),
                "--test", str(workspace["test"]),
                "--seed", "11",
                "--out", str(out),
                "--option", "steps=40",
                "--option", "batch=4",
            ]
        )
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "finetune on 80 examples:" in stdout
        assert "accuracy=" in stdout
        report = json.loads((out / "report.json").read_text())
        assert 0.0 <= report["accuracy"] <= 1.0
        assert report["n"] == 30

    def test_train_pet_accepts_unlabeled_file(self, workspace, capsys):
        rc = main(
            [
                "train",
                "--method", "pet",
                "--train", str(workspace["pool"]),
                "--test", str(workspace["test"]),
                "--unlabeled", str(workspace["unlabeled"]),
                "--seed", "11",
                "--option", "mlm_steps=5",
                "--option", "distill_steps=5",
                "--option", "batch=4",
            ]
        )
        assert rc == 0
        assert "pet on 80 examples:" in capsys.readouterr().out


@pytest.fixture(scope="module")
def sweep_dir(workspace):
    config = {
        "task_id": "so_duplicate",
        "method": "finetune",
        "sizes": [10, 20],
        "replicates": 2,
        "test_size": 30,
        "unlabeled_size": 0,
        "engine_options": {"steps": 20, "batch": 4},
    }
    config_path = workspace["root"] / "sweep.config.json"
    config_path.write_text(json.dumps(config))
    out = workspace["root"] / "sweeps"
    rc = main(
        [
            "sweep",
            "--config", str(config_path),
            "--pool", str(workspace["pool"]),
            "--test", str(workspace["test"]),
            "--out", str(out),
        ]
    )
    assert rc == 0
    return out


class TestSweepAndReport:
    def test_sweep_writes_result_files(self, sweep_dir):
        assert (sweep_dir / "sweep.result.json").exists()
        assert (sweep_dir / "sweep.timing.json").exists()
        assert (sweep_dir / "sweep.manifest.json").exists()

    def test_report_single_result_text(self, sweep_dir, capsys):
        rc = main(["report", "--result", str(sweep_dir / "sweep.result.json")])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "task=so_duplicate method=finetune" in stdout
        assert "±" in stdout

    def test_report_json_format(self, sweep_dir, capsys):
        rc = main(
            [
                "report",
                "--result", str(sweep_dir / "sweep.result.json"),
                "--format", "json",
            ]
        )
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert [row["size"] for row in payload["rows"]] == [10, 20]

    def test_report_compare_marks_best_columns(self, sweep_dir, capsys):
        """Comparing a result against itself renders starred, underscored cells."""
        result = str(sweep_dir / "sweep.result.json")
        rc = main(["report", "--result", result, result, "--metric", "accuracy"])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "so_duplicate/finetune@toy" in stdout
        assert "_*" in stdout

    def test_sweep_with_failing_cells_exits_nonzero(self, workspace, capsys):
        config = {
            "task_id": "so_duplicate",
            "method": "finetune",
            "sizes": [10],
            "replicates": 1,
            "test_size": 30,
            "engine_options": {"bogus_knob": 1},
        }
        config_path = workspace["root"] / "bad.config.json"
        config_path.write_text(json.dumps(config))
        rc = main(
            [
                "sweep",
                "--config", str(config_path),
                "--pool", str(workspace["pool"]),
                "--test", str(workspace["test"]),
                "--name", "bad",
                "--out", str(workspace["root"] / "sweeps-bad"),
            ]
        )
        assert rc == 1
        captured = capsys.readouterr()
        assert "cell(s) failed" in captured.err


class TestIngestRemoteSources:
    def test_ingest_bugzilla_through_mock_server(self, tmp_path, capsys):
        """The bugzilla ingest fetches pages and writes the task pool."""
        bugs = make_fixture_bugs(60, duplicate_links=2, dependency_links=3, seed=7, resolved_fixed=5)
        with MockBugzillaServer(bugs) as server:
            rc = main(
                [
                    "ingest", "bugzilla",
                    "--endpoint", server.endpoint,
                    "--task", "bugzilla_duplicate",
                    "--seed", "3",
                    "--out", str(tmp_path),
                ]
            )
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "fetched 60 bug records in 1 request(s)" in stdout
        dataset = load_dataset(tmp_path / "bugzilla_duplicate.pool.jsonl")
        labels = [e.label for e in dataset]
        assert labels.count("Duplicate") == 2
        assert labels.count("Neutral") == 2

    def test_ingest_stackoverflow_fixture(self, tmp_path, data_dir, capsys):
        rc = main(
            [
                "ingest", "stackoverflow",
                "--duplicates", str(data_dir / "so_duplicates.csv"),
                "--neutral", str(data_dir / "so_neutral.csv"),
                "--seed", "0",
                "--out", str(tmp_path),
            ]
        )
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "duplicates=2 neutrals=2 rejected_tag=1 rejected_window=3 malformed=1" in stdout
        dataset = load_dataset(tmp_path / "so_duplicate.pool.jsonl")
        assert len(dataset) == 4

    def test_ingest_srs_file(self, tmp_path, capsys):
        source = tmp_path / "reqs.jsonl"
        lines = [
            json.dumps({"u": "The pump shall start.", "v": "The pump may start.", "label": "Neutral"}),
            json.dumps({"u": "Log every event.", "v": "All events are logged.", "label": "Duplicate"}),
            json.dumps({"u": "Shut down on overheat.", "v": "Never shut down.", "label": "Conflict"}),
        ]
        source.write_text("\n".join(lines) + "\n")
        rc = main(
            ["ingest", "srs", "--file", str(source), "--out", str(tmp_path / "out")]
        )
        assert rc == 0
        assert "wrote 3 examples" in capsys.readouterr().out
        dataset = load_dataset(tmp_path / "out" / "srs_conflict.pool.jsonl")
        assert dataset.label_set.task_id == "srs_conflict"


class TestExitCodes:
    def test_missing_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["split", "--nope", "x"])
        assert excinfo.value.code == 2

    def test_malformed_option_is_usage_error(self, workspace):
        with pytest.raises(SystemExit) as excinfo:
            main(
                [
                    "train",
                    "--method", "finetune",
                    "--train", str(workspace["pool"]),
                    "--test", str(workspace["test"]),
                    "--option", "no-equals-sign",
                ]
            )
        assert excinfo.value.code == 2

    def test_missing_input_file_exits_one(self, tmp_path, capsys):
        rc = main(
            [
                "train",
                "--method", "finetune",
                "--train", str(tmp_path / "absent.jsonl"),
                "--test", str(tmp_path / "absent.jsonl"),
            ]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_infeasible_split_exits_one(self, workspace, capsys):
        rc = main(
            [
                "split",
                "--data", str(workspace["root"] / "data" / "so_duplicate.pool.jsonl"),
                "--train-pool", "60",
                "--test", "1000",
                "--out", str(workspace["root"] / "never"),
            ]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_srs_label_exits_one(self, tmp_path, capsys):
        source = tmp_path / "reqs.jsonl"
        source.write_text(json.dumps({"u": "a", "v": "b", "label": "conflict"}) + "\n")
        rc = main(["ingest", "srs", "--file", str(source), "--out", str(tmp_path)])
        assert rc == 1
        assert "case-sensitive" in capsys.readouterr().err

    def test_report_on_non_sweep_file_exits_one(self, tmp_path, capsys):
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"format": "nope"}))
        rc = main(["report", "--result", str(path)])
        assert rc == 1
        assert "not a sweep result" in capsys.readouterr().err


class TestOptionParsing:
    def test_values_parse_as_json_when_possible(self):
        assert _parse_option("steps=40") == ("steps", 40)
        assert _parse_option("lr=0.05") == ("lr", 0.05)
        assert _parse_option("separator=\" | \"") == ("separator", " | ")
        assert _parse_option("flag=true") == ("flag", True)

    def test_non_json_values_stay_strings(self):
        assert _parse_option("name=plain-text") == ("name", "plain-text")

    def test_missing_separator_rejected(self):
        with pytest.raises(argparse.ArgumentTypeError):
            _parse_option("no-equals")


class TestParserShape:
    def test_mock_bugzilla_subcommand_wired(self):
        """The demo server subcommand parses without being run."""
        args = build_parser().parse_args(
            ["mock-bugzilla", "--port", "8123", "--records", "50"]
        )
        assert args.port == 8123
        assert args.records == 50
        assert callable(args.func)

    def test_prog_name(self):
        assert build_parser().prog == "pairshot"
