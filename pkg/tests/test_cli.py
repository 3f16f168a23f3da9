import json
import shutil

import pytest

from proofscope.cli import main
from proofscope.clustering import cluster_count

from conftest import FIXTURES


@pytest.fixture
def workdir(tmp_path):
    for name in (
        "seq.defs", "telescope.defs", "telescope.jsonl",
        "strategy.defs", "strategy.jsonl", "planted30.defs",
    ):
        shutil.copy(FIXTURES / name, tmp_path / name)
    return tmp_path


def run_cli(args, capsys=None):
    code = main([str(a) for a in args])
    return code


class TestClusterTerms:
    def test_json_report(self, workdir, tmp_path):
        out = tmp_path / "report.json"
        code = run_cli([
            "cluster-terms", workdir / "seq.defs",
            "--granularity", "3", "--seed", "42", "--out", out,
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["command"] == "cluster-terms"
        assert report["termClusters"]["k"] == cluster_count(11, 3)
        assert report["config"]["seed"] == 42
        assert report["config"]["granularity"] == 3
        assert report["rounds"] >= 1
        assert len(report["history"]) == report["rounds"]
        members = {
            m["objectId"]
            for c in report["termClusters"]["clusters"]
            for m in c["members"]
        }
        assert len(members) == 11

    def test_rerun_byte_identical(self, workdir, tmp_path):
        # the destination path must not leak into the report bytes
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        base = ["cluster-terms", workdir / "seq.defs", "--seed", "7", "--out"]
        assert run_cli(base + [a]) == 0
        assert run_cli(base + [b]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_csv_export(self, workdir, tmp_path):
        out = tmp_path / "vectors.csv"
        code = run_cli([
            "cluster-terms", workdir / "seq.defs", "--format", "csv", "--out", out,
        ])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 11
        assert all(len(line.split(",")) == 301 for line in lines)

    def test_text_format(self, workdir, capsys):
        assert run_cli(["cluster-terms", workdir / "seq.defs", "--format", "text"]) == 0
        captured = capsys.readouterr().out
        assert "term clusters" in captured

    def test_dump_tables(self, workdir, tmp_path):
        dump = tmp_path / "tables.tsv"
        code = run_cli([
            "cluster-terms", workdir / "seq.defs", "--dump-tables", dump,
        ])
        assert code == 0
        lines = dump.read_text().splitlines()
        assert lines == sorted(lines)
        assert all("\t" in line for line in lines)
        assert any(line.startswith("term:double\t") for line in lines)
        assert any(line.startswith("tactic:rewrite\t5.0") for line in lines)


class TestClusterProofs:
    def test_patch_report(self, workdir, tmp_path):
        out = tmp_path / "report.json"
        code = run_cli([
            "cluster-proofs", workdir / "strategy.defs", workdir / "strategy.jsonl",
            "--seed", "3", "--out", out,
        ])
        assert code == 0
        report = json.loads(out.read_text())
        patch_ids = {
            m["objectId"]
            for c in report["patchClusters"]["clusters"]
            for m in c["members"]
        }
        assert len(patch_ids) == 12
        assert "strat1[0..4]" in patch_ids

    def test_csv_exports_patch_vectors(self, workdir, tmp_path):
        out = tmp_path / "patches.csv"
        code = run_cli([
            "cluster-proofs", workdir / "strategy.defs", workdir / "strategy.jsonl",
            "--format", "csv", "--out", out,
        ])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 12
        assert all(len(line.split(",")) == 86 for line in lines)


class TestQuery:
    def test_patch_target_returns_siblings(self, workdir, tmp_path):
        out = tmp_path / "query.json"
        code = run_cli([
            "query", workdir / "strategy.defs", workdir / "strategy.jsonl",
            "--target", "strat1[0..4]", "--seed", "0", "--out", out,
        ])
        assert code == 0
        report = json.loads(out.read_text())
        got = [r["objectId"] for r in report["results"]]
        assert "strat2[0..4]" in got and "strat3[0..4]" in got

    def test_definition_target(self, workdir, tmp_path):
        out = tmp_path / "query.json"
        code = run_cli([
            "query", workdir / "planted30.defs",
            "--granularity", "5", "--target", "eqna", "--seed", "0", "--out", out,
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert "eqsa" in [r["objectId"] for r in report["results"]]

    def test_unknown_target_is_input_error(self, workdir, capsys):
        code = run_cli([
            "query", workdir / "seq.defs", "--target", "ghost",
        ])
        assert code == 1
        assert "ghost" in capsys.readouterr().err


class TestExplain:
    def _strategy_cluster_id(self, workdir, tmp_path):
        out = tmp_path / "probe.json"
        run_cli([
            "cluster-proofs", workdir / "strategy.defs", workdir / "strategy.jsonl",
            "--seed", "0", "--out", out,
        ])
        report = json.loads(out.read_text())
        for cluster in report["patchClusters"]["clusters"]:
            ids = {m["objectId"] for m in cluster["members"]}
            if "strat1[0..4]" in ids:
                return cluster["id"]
        raise AssertionError("strategy cluster not found")

    def test_dot_output(self, workdir, tmp_path):
        cid = self._strategy_cluster_id(workdir, tmp_path)
        out = tmp_path / "pattern.dot"
        code = run_cli([
            "explain", workdir / "strategy.defs", workdir / "strategy.jsonl",
            "--target", str(cid), "--seed", "0", "--format", "dot", "--out", out,
        ])
        assert code == 0
        text = out.read_text()
        assert text.startswith("digraph proof_pattern {")
        assert text.count("[label=") >= 5

    def test_dot_byte_stable(self, workdir, tmp_path):
        cid = self._strategy_cluster_id(workdir, tmp_path)
        outs = []
        for name in ("a.dot", "b.dot"):
            out = tmp_path / name
            run_cli([
                "explain", workdir / "strategy.defs", workdir / "strategy.jsonl",
                "--target", str(cid), "--seed", "0", "--format", "dot", "--out", out,
            ])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_json_output_includes_selection(self, workdir, tmp_path):
        cid = self._strategy_cluster_id(workdir, tmp_path)
        out = tmp_path / "explain.json"
        code = run_cli([
            "explain", workdir / "strategy.defs", workdir / "strategy.jsonl",
            "--target", str(cid), "--seed", "0", "--out", out,
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["clusterId"] == cid
        assert len(report["automaton"]["states"]) == 5
        assert isinstance(report["selection"]["selected"], list)

    def test_bad_cluster_id(self, workdir, capsys):
        code = run_cli([
            "explain", workdir / "strategy.defs", workdir / "strategy.jsonl",
            "--target", "99",
        ])
        assert code == 1

    def test_non_numeric_target(self, workdir, capsys):
        code = run_cli([
            "explain", workdir / "strategy.defs", workdir / "strategy.jsonl",
            "--target", "nope",
        ])
        assert code == 1


class TestErrorPaths:
    def test_missing_file_names_path(self, capsys):
        code = run_cli(["cluster-terms", "/no/such/file.defs"])
        assert code == 1
        assert "/no/such/file.defs" in capsys.readouterr().err

    def test_parse_error_is_input_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.defs"
        bad.write_text("broken : := .")
        assert run_cli(["cluster-terms", bad]) == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_threads_env(self, workdir, monkeypatch, capsys):
        monkeypatch.setenv("PROOFSCOPE_THREADS", "zero")
        assert run_cli(["cluster-terms", workdir / "seq.defs"]) == 1
        assert "PROOFSCOPE_THREADS" in capsys.readouterr().err

    def test_threads_env_accepted(self, workdir, monkeypatch, tmp_path):
        monkeypatch.setenv("PROOFSCOPE_THREADS", "4")
        out = tmp_path / "r.json"
        assert run_cli(["cluster-terms", workdir / "seq.defs", "--out", out]) == 0

    def test_malformed_jsonl_is_input_error(self, workdir, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"lemma": "x"\n')
        code = run_cli(["cluster-proofs", workdir / "strategy.defs", bad])
        assert code == 1
        assert "JSON" in capsys.readouterr().err

    def test_usage_error_is_input_error(self, workdir, capsys):
        # query without --target: bad invocation, not an internal fault
        assert run_cli(["query", workdir / "seq.defs"]) == 1
        assert run_cli(["cluster-terms"]) == 1

    def test_internal_error_exits_two(self, workdir, monkeypatch, capsys):
        import proofscope.cli as cli_module

        def boom(*args, **kwargs):
            raise RuntimeError("synthetic fault")

        monkeypatch.setattr(cli_module, "recurrent_cluster", boom)
        code = run_cli(["cluster-terms", workdir / "seq.defs"])
        assert code == 2
        err = capsys.readouterr().err
        assert "internal error" in err and "Traceback" not in err


class TestCoqDialect:
    def test_coq_tactics_round_trip(self, tmp_path):
        defs = tmp_path / "c.defs"
        defs.write_text("lemA : Prop .\nlemB : Prop .\n")
        trace = {
            "lemma": "coqproof",
            "steps": [
                {
                    "goal": "forall (x : nat), even (x + x)",
                    "tactics": [
                        {"name": "induction", "args": [{"kind": "hyp", "name": "x", "type": "nat"}]},
                    ],
                    "subgoalsAfter": 2,
                },
                {
                    "goal": "even 0",
                    "tactics": [{"name": "omega", "args": []}],
                    "subgoalsAfter": 0,
                },
            ],
        }
        trace2 = {
            "lemma": "coqproof2",
            "steps": [
                {
                    "goal": "forall (y : nat), odd (y + 1)",
                    "tactics": [{"name": "intros", "args": []}],
                    "subgoalsAfter": 1,
                },
                {
                    "goal": "odd 1",
                    "tactics": [{"name": "auto", "args": []}],
                    "subgoalsAfter": 0,
                },
            ],
        }
        proofs_file = tmp_path / "c.jsonl"
        proofs_file.write_text(json.dumps(trace) + "\n" + json.dumps(trace2) + "\n")
        out = tmp_path / "r.json"
        code = run_cli([
            "cluster-proofs", defs, proofs_file,
            "--dialect", "coq", "--out", out,
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["config"]["dialect"] == "coq"
        assert report["patchClusters"]["k"] >= 1
