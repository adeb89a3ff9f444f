"""Tests for the command-line interface."""

import json
from pathlib import Path

import pytest

from conftest import BISTRO_V1, EVOL_V1, WORKER
from opcode_sim.cli import main


def error_record(capsys) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture
def worker_file(tmp_path: Path) -> Path:
    path = tmp_path / "worker.oasm"
    path.write_text(WORKER)
    return path


class TestParse:
    def test_summary(self, worker_file, capsys):
        assert main(["parse", str(worker_file)]) == 0
        out = capsys.readouterr().out
        assert "Program: worker" in out
        assert "checksum" in out

    def test_json(self, worker_file, capsys):
        assert main(["parse", str(worker_file), "--format", "json"]) == 0
        records = json.loads(capsys.readouterr().out)
        assert [s["name"] for s in records[0]["subroutines"]] == ["setup", "checksum", "fill"]

    def test_syntax_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.oasm"
        bad.write_text("proc f\n mov eax, [\nendp\n")
        assert main(["parse", str(bad)]) == 2
        record = error_record(capsys)
        assert record["error"] == "ListingSyntaxError"
        assert record["line"] == 2
        assert record["exit_code"] == 2

    def test_missing_file(self, tmp_path, capsys):
        assert main(["parse", str(tmp_path / "none.oasm")]) == 1
        assert error_record(capsys)["error"] == "UsageError"

    def test_invalid_utf8_is_a_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.oasm"
        bad.write_bytes(b"proc f\n mov eax, 1\n \xff\xfe\nendp\n")
        assert main(["parse", str(bad)]) == 2
        record = error_record(capsys)
        assert record["error"] == "ListingSyntaxError"
        assert record["line"] == 3


def test_bad_flag_is_usage_error(capsys):
    assert main(["compare", "--no-such-flag"]) == 1
    assert error_record(capsys)["exit_code"] == 1


def test_no_command_prints_help(capsys):
    assert main([]) == 0
    assert "usage" in capsys.readouterr().out.lower()


class TestCompare:
    def test_self_compare_is_zero(self, worker_file, capsys):
        assert main(["compare", str(worker_file), str(worker_file)]) == 0
        assert "Distance: 0.000" in capsys.readouterr().out

    def test_json_with_matches(self, tmp_path, capsys):
        a = tmp_path / "a.oasm"
        b = tmp_path / "b.oasm"
        a.write_text("proc f\n mov eax, 1\nendp\n")
        b.write_text("proc f\n mov eax, 1\nendp\nproc g\n push eax\nendp\n")
        assert main(["compare", str(a), str(b), "--format", "json", "--matches"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["directed"] == {"a_to_b": 0.0, "b_to_a": 1.0}
        assert record["distance"] == 0.5
        assert record["matches"][1][1] == {"query": "g", "target": "f", "distance": 2.0}

    def test_metric_flags(self, tmp_path, capsys):
        a = tmp_path / "a.oasm"
        b = tmp_path / "b.oasm"
        a.write_text("proc f\n mov eax, 1\n push eax\nendp\n")
        b.write_text("proc f\n mov eax, 1\nendp\n")
        assert main(["compare", str(a), str(b), "--format", "json", "--exponent", "1"]) == 0
        assert json.loads(capsys.readouterr().out)["distance"] == pytest.approx(1.0)

    def test_invalid_exponent(self, worker_file, capsys):
        assert main(["compare", str(worker_file), str(worker_file), "--exponent", "0.5"]) == 1

    def test_non_numeric_weight(self, worker_file, tmp_path, capsys):
        weights = tmp_path / "weights.yaml"
        weights.write_text("nop: heavy\n")
        assert main(["compare", str(worker_file), str(worker_file), "--weights", str(weights)]) == 1
        assert error_record(capsys)["error"] == "UsageError"

    def test_config_then_flag_precedence(self, tmp_path, capsys):
        a = tmp_path / "a.oasm"
        b = tmp_path / "b.oasm"
        a.write_text("proc f\n mov eax, 1\n push eax\nendp\n")
        b.write_text("proc f\n mov eax, 1\nendp\n")
        config = tmp_path / "analysis.yaml"
        config.write_text("metric:\n  r: 1\n")
        assert main(["compare", str(a), str(b), "--format", "json", "--config", str(config)]) == 0
        assert json.loads(capsys.readouterr().out)["metric"]["r"] == 1.0
        args = ["compare", str(a), str(b), "--format", "json", "--config", str(config), "--exponent", "3"]
        assert main(args) == 0
        assert json.loads(capsys.readouterr().out)["metric"]["r"] == 3.0


class TestMatrixAndClassify:
    def test_matrix_outputs(self, listing_dir, capsys):
        assert main(["matrix", str(listing_dir)]) == 0
        csv_text = (listing_dir / "matrix.csv").read_text()
        assert csv_text.splitlines()[0] == ",evol_v1,evol_v2,regswap_v1,regswap_v2"
        data = json.loads((listing_dir / "matrix.json").read_text())
        assert data["labels"] == ["evol_v1", "evol_v2", "regswap_v1", "regswap_v2"]
        assert data["metric"]["r"] == 2.0

    def test_matrix_is_idempotent(self, listing_dir, tmp_path):
        out1, out2 = tmp_path / "m1.json", tmp_path / "m2.json"
        assert main(["matrix", str(listing_dir), "--json", str(out1), "--csv", str(tmp_path / "m1.csv")]) == 0
        assert main(["matrix", str(listing_dir), "--json", str(out2), "--csv", str(tmp_path / "m2.csv"), "--workers", "3"]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert (tmp_path / "m1.csv").read_bytes() == (tmp_path / "m2.csv").read_bytes()

    def test_variants_at_zero_and_classified(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        base = corpus / "base.oasm"
        base.write_text(WORKER)
        assert main(["mutate", str(base), "--technique", "regswap", "--seed", "3", "--output", str(corpus / "swapped.oasm")]) == 0
        assert main(["mutate", str(base), "--technique", "permute", "--seed", "3", "--density", "1", "--output", str(corpus / "permuted.oasm")]) == 0
        (corpus / "other.oasm").write_text(BISTRO_V1)

        assert main(["matrix", str(corpus)]) == 0
        data = json.loads((corpus / "matrix.json").read_text())
        labels = data["labels"]
        values = data["values"]
        family = [labels.index(name) for name in ("base", "permuted", "swapped")]
        for i in family:
            for j in family:
                assert values[i][j] == 0.0

        capsys.readouterr()
        assert main(["classify", str(corpus / "matrix.json"), "--threshold", "0.057", "--format", "json"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert ["base", "permuted", "swapped"] in result["clusters"]
        assert ["other"] in result["clusters"]

    def test_classify_text_output_file(self, listing_dir, tmp_path):
        assert main(["matrix", str(listing_dir)]) == 0
        out = tmp_path / "classes.txt"
        assert main(["classify", str(listing_dir / "matrix.csv"), "--output", str(out)]) == 0
        assert "CLASSIFICATION (threshold 0.057)" in out.read_text()

    def test_matrix_needs_two_programs(self, tmp_path, capsys):
        corpus = tmp_path / "one"
        corpus.mkdir()
        (corpus / "a.oasm").write_text(EVOL_V1)
        assert main(["matrix", str(corpus)]) == 3
        assert error_record(capsys)["error"] == "TooFewPrograms"
        assert not (corpus / "matrix.csv").exists()

    def test_negative_threshold(self, listing_dir, capsys):
        assert main(["matrix", str(listing_dir)]) == 0
        assert main(["classify", str(listing_dir / "matrix.json"), "--threshold", "-1"]) == 1


class TestFeatures:
    def test_writes_caches(self, listing_dir, tmp_path, capsys):
        out_dir = tmp_path / "caches"
        listings = sorted(str(p) for p in listing_dir.glob("*.oasm"))
        assert main(["features", *listings, "--output-dir", str(out_dir)]) == 0
        assert sorted(p.name for p in out_dir.iterdir()) == [
            "evol_v1.hist.json",
            "evol_v2.hist.json",
            "regswap_v1.hist.json",
            "regswap_v2.hist.json",
        ]
        assert main(["compare", str(out_dir / "evol_v1.hist.json"), str(listing_dir / "evol_v1.oasm")]) == 0
        assert "Distance: 0.000" in capsys.readouterr().out


class TestMutateAndFamily:
    def test_mutate_default_output_name(self, worker_file):
        assert main(["mutate", str(worker_file), "--technique", "garbage", "--seed", "9", "--density", "0.5"]) == 0
        assert (worker_file.parent / "worker_garbage_9.oasm").exists()

    def test_mutate_with_permutation(self, tmp_path):
        source = tmp_path / "p.oasm"
        source.write_text("proc f\n mov eax, ebx\nendp\n")
        out = tmp_path / "q.oasm"
        args = ["mutate", str(source), "--technique", "regswap", "--permutation", "eax=ebx,ebx=eax", "--output", str(out)]
        assert main(args) == 0
        assert out.read_text() == "proc f\n    mov ebx, eax\nendp\n"

    def test_mutate_bad_permutation(self, worker_file, capsys):
        args = ["mutate", str(worker_file), "--technique", "regswap", "--permutation", "eax=ebx"]
        assert main(args) == 3
        assert error_record(capsys)["error"] == "InvalidPermutation"

    def test_mutate_bad_density(self, worker_file):
        assert main(["mutate", str(worker_file), "--technique", "garbage", "--density", "2"]) == 1

    def test_mutate_rulebook_with_bad_form(self, worker_file, tmp_path, capsys):
        rules = tmp_path / "rules.yaml"
        rules.write_text("equivalences:\n  - name: bad\n    forms:\n      a: 5\n      b: nop\n")
        args = ["mutate", str(worker_file), "--technique", "substitute", "--rulebook", str(rules)]
        assert main(args) == 3
        assert error_record(capsys)["error"] == "InvalidRule"

    def test_family_is_byte_identical_across_runs(self, worker_file, tmp_path):
        dirs = [tmp_path / "run1", tmp_path / "run2"]
        for out_dir in dirs:
            args = [
                "family", str(worker_file), "--count", "3",
                "--technique", "garbage", "--technique", "permute",
                "--seed", "42", "--density", "0.4", "--output-dir", str(out_dir),
            ]
            assert main(args) == 0
        names = sorted(p.name for p in dirs[0].iterdir())
        assert names == ["manifest.json", "worker_v1.oasm", "worker_v2.oasm", "worker_v3.oasm"]
        for name in names:
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
        manifest = json.loads((dirs[0] / "manifest.json").read_text())
        assert manifest["variants"][2]["seed"] == 44

    def test_family_with_custom_rulebook(self, tmp_path):
        source = tmp_path / "p.oasm"
        source.write_text("proc f\n inc eax\n inc ebx\nendp\n")
        rules = tmp_path / "rules.yaml"
        rules.write_text("equivalences:\n  - name: inc\n    forms:\n      inc: [\"inc {r}\"]\n      add: [\"add {r}, 1\"]\n")
        out_dir = tmp_path / "fam"
        args = [
            "family", str(source), "-n", "1", "--technique", "substitute",
            "--density", "1", "--rulebook", str(rules), "--output-dir", str(out_dir),
        ]
        assert main(args) == 0
        assert (out_dir / "p_v1.oasm").read_text() == "proc f\n    add eax, 1\n    add ebx, 1\nendp\n"


class TestCalibrate:
    def test_report(self, tmp_path, capsys):
        matrix = tmp_path / "m.json"
        matrix.write_text(json.dumps({
            "labels": ["a", "b", "c"],
            "values": [[0.0, 0.01, 0.3], [0.01, 0.0, 0.4], [0.3, 0.4, 0.0]],
        }))
        labels = tmp_path / "labels.yaml"
        labels.write_text("families:\n  f: [a, b]\n  g: [c]\n")
        assert main(["calibrate", str(matrix), str(labels), "--format", "json"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record == {"valid": True, "threshold": 0.01, "intra_max": 0.01, "inter_min": 0.3}

    def test_unlabeled_program(self, tmp_path, capsys):
        matrix = tmp_path / "m.json"
        matrix.write_text(json.dumps({"labels": ["a", "b"], "values": [[0.0, 0.1], [0.1, 0.0]]}))
        labels = tmp_path / "labels.yaml"
        labels.write_text("a: f\n")
        assert main(["calibrate", str(matrix), str(labels)]) == 3
        assert error_record(capsys)["error"] == "InvalidLabels"

    def test_family_members_not_a_list(self, tmp_path, capsys):
        matrix = tmp_path / "m.json"
        matrix.write_text(json.dumps({"labels": ["a", "b"], "values": [[0.0, 0.1], [0.1, 0.0]]}))
        labels = tmp_path / "labels.yaml"
        labels.write_text("families:\n  x: 5\n")
        assert main(["calibrate", str(matrix), str(labels)]) == 1
        assert error_record(capsys)["error"] == "UsageError"
