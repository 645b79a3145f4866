"""End-to-end command-line behaviour, including the exit-code contract."""

import json
import socket
from pathlib import Path

import pytest

from diarkit.cli import main
from diarkit.corpus import load_manifest

DATA = Path(__file__).parent / "data"

TEXTS = [
    "selamat pagi semuanya",
    "bagaimana kabar proyek kita",
    "saya sudah memeriksa datanya",
    "hasilnya terlihat cukup bagus",
    "mari kita lanjutkan besok",
]


def write_config(tmp_path, **overrides) -> Path:
    payload = {
        "name": "demo",
        "num_conversations": 3,
        "master_seed": 7,
        "partition_ratios": [0.8, 0.1, 0.1],
        "script": {
            "speakers": [
                {"speaker": "spk0", "voice": "id-ID-ArdiNeural"},
                {"speaker": "spk1", "voice": "id-ID-GadisNeural"},
            ],
            "texts": TEXTS,
            "num_utterances": 4,
            "gap_range": [0.1, 0.3],
            "overlap_probability": 0.3,
            "overlap_range": [0.1, 0.2],
        },
    }
    payload.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    return path


def tree_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


def closed_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class TestSynth:
    def test_config_file_run(self, tmp_path, capsys):
        config = write_config(tmp_path)
        root = tmp_path / "out"
        assert main(["--output-root", str(root), "synth", "--config", str(config)]) == 0
        out = capsys.readouterr().out
        assert "conversations: 3" in out
        assert (root / "manifest.json").is_file()
        assert (root / "registry.json").is_file()
        assert len(list((root / "wav").iterdir())) == 3
        assert len(list((root / "rttm").iterdir())) == 3
        assert (root / "lists" / "demo.train.lst").is_file()

    def test_rerun_is_byte_identical(self, tmp_path):
        config = write_config(tmp_path)
        root = tmp_path / "out"
        argv = ["--output-root", str(root), "synth", "--config", str(config)]
        assert main(argv) == 0
        first = tree_bytes(root)
        assert main(argv) == 0
        assert tree_bytes(root) == first

    def test_inline_flags(self, tmp_path, capsys):
        root = tmp_path / "out"
        code = main(
            [
                "--output-root",
                str(root),
                "--seed",
                "5",
                "synth",
                "--num-conversations",
                "2",
                "--num-utterances",
                "3",
                "--name",
                "inline",
            ]
        )
        assert code == 0
        manifest = load_manifest(root / "manifest.json")
        assert manifest.count == 2
        assert (root / "lists" / "inline.train.lst").is_file()

    def test_seed_flag_overrides_config(self, tmp_path):
        config = write_config(tmp_path)
        root_a = tmp_path / "a"
        root_b = tmp_path / "b"
        assert main(["--output-root", str(root_a), "synth", "--config", str(config)]) == 0
        assert (
            main(["--output-root", str(root_b), "--seed", "99", "synth", "--config", str(config)])
            == 0
        )
        assert tree_bytes(root_a / "wav") != tree_bytes(root_b / "wav")

    def test_hours_target(self, tmp_path):
        config = write_config(tmp_path, num_conversations=0)
        root = tmp_path / "out"
        code = main(
            ["--output-root", str(root), "synth", "--config", str(config), "--hours", "0.004"]
        )
        assert code == 0
        manifest = load_manifest(root / "manifest.json")
        assert manifest.total_audio_seconds >= 0.004 * 3600

    def test_missing_output_root_is_config_error(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["synth", "--config", str(config)]) == 2

    def test_no_conversations_is_config_error(self, tmp_path):
        config = write_config(tmp_path, num_conversations=0)
        assert main(["--output-root", str(tmp_path / "o"), "synth", "--config", str(config)]) == 2

    def test_invalid_ratios_in_config(self, tmp_path):
        config = write_config(tmp_path, partition_ratios=[0.5, 0.1, 0.1])
        assert main(["--output-root", str(tmp_path / "o"), "synth", "--config", str(config)]) == 2

    def test_malformed_config_json(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text("{not json")
        assert main(["--output-root", str(tmp_path / "o"), "synth", "--config", str(config)]) == 2

    def test_http_backend_needs_endpoint(self, tmp_path):
        config = write_config(tmp_path)
        code = main(
            ["--output-root", str(tmp_path / "o"), "synth", "--config", str(config), "--backend", "http"]
        )
        assert code == 2

    def test_unreachable_endpoint_is_backend_failure(self, tmp_path):
        config = write_config(tmp_path, num_conversations=1)
        code = main(
            [
                "--output-root",
                str(tmp_path / "o"),
                "synth",
                "--config",
                str(config),
                "--backend",
                "http",
                "--endpoint",
                f"http://127.0.0.1:{closed_port()}/tts",
            ]
        )
        assert code == 3


class TestProtocol:
    @pytest.fixture()
    def corpus_root(self, tmp_path):
        config = write_config(tmp_path, num_conversations=5)
        root = tmp_path / "out"
        assert main(["--output-root", str(root), "synth", "--config", str(config)]) == 0
        return root

    def test_partition_and_emit(self, corpus_root, capsys):
        code = main(
            [
                "--seed",
                "3",
                "protocol",
                "--manifest",
                str(corpus_root / "manifest.json"),
                "--name",
                "exp",
                "--ratios",
                "0.6,0.2,0.2",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "train: 3" in out
        assert "development: 1" in out
        assert "test: 1" in out
        for subset in ("train", "development", "test"):
            assert (corpus_root / "lists" / f"exp.{subset}.lst").is_file()
            assert (corpus_root / "lists" / f"exp.{subset}.rttm").is_file()
            assert (corpus_root / "lists" / f"exp.{subset}.uem").is_file()

    def test_invalid_ratios(self, corpus_root):
        code = main(
            [
                "protocol",
                "--manifest",
                str(corpus_root / "manifest.json"),
                "--name",
                "exp",
                "--ratios",
                "0.9,0.9,0.9",
            ]
        )
        assert code == 2

    def test_missing_manifest(self, tmp_path):
        code = main(
            ["protocol", "--manifest", str(tmp_path / "nope.json"), "--name", "exp"]
        )
        assert code == 2


class TestScore:
    def run_score(self, capsys, *extra):
        code = main(
            [
                "score",
                "--reference",
                str(DATA / "score_reference.rttm"),
                "--hypothesis",
                str(DATA / "score_hypothesis.rttm"),
                *extra,
            ]
        )
        return code, capsys.readouterr()

    def test_fixture_matches_frozen_oracle_values(self, capsys):
        # expected components confirmed against the exhaustive-mapping scorer
        code, captured = self.run_score(capsys, "--format", "json")
        assert code == 0
        payload = json.loads(captured.out)
        overall = payload["overall"]["der"]
        assert overall["total"] == 11.5
        assert overall["fa"] == pytest.approx(0.5, abs=1e-9)
        assert overall["miss"] == pytest.approx(1.8, abs=1e-9)
        assert overall["conf"] == pytest.approx(0.1, abs=1e-9)
        assert overall["der"] == pytest.approx(2.4 / 11.5, abs=1e-9)
        file_entry = payload["files"][0]
        assert file_entry["file_id"] == "mtg"
        assert file_entry["der"]["mapping"] == [["A", "s1"], ["B", "s2"], ["C", "s3"]]
        detection = payload["overall"]["detection"]
        assert detection["tp"] == 60
        assert detection["fp"] == 0
        assert detection["fn"] == 90
        assert detection["tn"] == 970
        assert detection["precision"] == 1.0
        assert detection["recall"] == 0.4

    def test_fixture_live_oracle_agreement(self, capsys):
        import sys

        sys.path.insert(0, str(Path(__file__).parent))
        from oracles import brute_force_der

        from diarkit.rttm import load_rttm

        reference = load_rttm(DATA / "score_reference.rttm")["mtg"]
        hypothesis = load_rttm(DATA / "score_hypothesis.rttm")["mtg"]
        oracle = brute_force_der(reference, hypothesis)
        code, captured = self.run_score(capsys, "--format", "json")
        assert code == 0
        overall = json.loads(captured.out)["overall"]["der"]
        assert overall["fa"] == pytest.approx(oracle["false_alarm"], abs=1e-9)
        assert overall["miss"] == pytest.approx(oracle["miss"], abs=1e-9)
        assert overall["conf"] == pytest.approx(oracle["confusion"], abs=1e-9)
        assert overall["total"] == pytest.approx(oracle["total"], abs=1e-9)

    def test_json_stdout_is_pure(self, capsys):
        code, captured = self.run_score(capsys, "--format", "json")
        assert code == 0
        json.loads(captured.out)  # whole stream must parse

    def test_table_output(self, capsys):
        code, captured = self.run_score(capsys)
        assert code == 0
        assert "OVERALL" in captured.out
        assert "20.87%" in captured.out
        assert "overlap detection at frame 0.010 s" in captured.out

    def test_stdout_deterministic(self, capsys):
        _, first = self.run_score(capsys, "--format", "json")
        _, second = self.run_score(capsys, "--format", "json")
        assert first.out == second.out

    def test_self_score_table(self, capsys):
        code = main(
            [
                "score",
                "--reference",
                str(DATA / "score_reference.rttm"),
                "--hypothesis",
                str(DATA / "score_reference.rttm"),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "0.00%" in out
        assert "100.00%" in out

    def test_empty_hypothesis_gives_full_miss(self, tmp_path, capsys):
        empty = tmp_path / "empty.rttm"
        empty.write_text("")
        code = main(
            [
                "score",
                "--reference",
                str(DATA / "score_reference.rttm"),
                "--hypothesis",
                str(empty),
                "--format",
                "json",
            ]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["overall"]["der"]["der"] == 1.0

    def test_unknown_file_id_exits_4(self, tmp_path, capsys):
        rogue = tmp_path / "rogue.rttm"
        rogue.write_text("SPEAKER other 1 0.000 1.000 <NA> <NA> s1 <NA> <NA>\n")
        code = main(
            [
                "score",
                "--reference",
                str(DATA / "score_reference.rttm"),
                "--hypothesis",
                str(rogue),
            ]
        )
        assert code == 4
        assert "other" in capsys.readouterr().err

    def test_empty_reference_exits_5(self, tmp_path):
        empty = tmp_path / "empty.rttm"
        empty.write_text("")
        code = main(
            [
                "score",
                "--reference",
                str(empty),
                "--hypothesis",
                str(DATA / "score_hypothesis.rttm"),
            ]
        )
        assert code == 5

    def test_collar_swallowing_reference_exits_5(self, capsys):
        code, _ = self.run_score(capsys, "--collar", "10.0")
        assert code == 5

    def test_collar_and_skip_overlap_flags(self, capsys):
        code, captured = self.run_score(capsys, "--collar", "0.25", "--skip-overlap")
        assert code == 0
        assert "OVERALL" in captured.out


class TestChunks:
    @pytest.fixture()
    def corpus_root(self, tmp_path):
        config = write_config(tmp_path, num_conversations=3)
        root = tmp_path / "out"
        assert main(["--output-root", str(root), "synth", "--config", str(config)]) == 0
        return root

    def test_stdout_json(self, corpus_root, capsys):
        code = main(
            ["chunks", "--manifest", str(corpus_root / "manifest.json"), "--duration", "2.0"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["schema"] == "chunks@1"
        manifest = load_manifest(corpus_root / "manifest.json")
        expected = sum(int(r.duration / 2.0 + 1e-9) for r in manifest.records)
        assert len(payload["entries"]) == expected

    def test_output_file(self, corpus_root, tmp_path, capsys):
        out_file = tmp_path / "chunks.json"
        code = main(
            [
                "chunks",
                "--manifest",
                str(corpus_root / "manifest.json"),
                "--output",
                str(out_file),
            ]
        )
        assert code == 0
        assert capsys.readouterr().out == ""
        assert json.loads(out_file.read_text())["schema"] == "chunks@1"

    def test_subset_list_filters(self, corpus_root, capsys):
        subset = corpus_root / "lists" / "demo.train.lst"
        code = main(
            [
                "chunks",
                "--manifest",
                str(corpus_root / "manifest.json"),
                "--subset",
                str(subset),
            ]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        train_ids = set(subset.read_text().split())
        assert {e["conversation_id"] for e in payload["entries"]} == train_ids

    def test_step_flag(self, corpus_root, capsys):
        argv = ["chunks", "--manifest", str(corpus_root / "manifest.json"), "--duration", "2.0"]
        assert main(argv) == 0
        dense_argv = argv + ["--step", "1.0"]
        coarse = json.loads(capsys.readouterr().out)
        assert main(dense_argv) == 0
        dense = json.loads(capsys.readouterr().out)
        assert len(dense["entries"]) > len(coarse["entries"])


class TestParser:
    def test_no_subcommand_exits_2(self, capsys):
        assert main([]) == 2
        capsys.readouterr()

    def test_unknown_subcommand_exits_2(self, capsys):
        assert main(["frobnicate"]) == 2
        capsys.readouterr()

    def test_help_exits_0(self, capsys):
        assert main(["--help"]) == 0
        assert "synth" in capsys.readouterr().out
