import json
import subprocess
import sys

import pytest

from paramgame.cli import main


def run_cli(args, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    doc = json.loads(out.read_text()) if out.exists() else None
    return code, doc, out


def test_games_check_passes(tmp_path):
    code, doc, _ = run_cli(["games-check", "--max-n", "3", "--seed", "1"], tmp_path)
    assert code == 0
    assert doc["ok"] is True
    assert all(c["prefix_closed"] and c["alternating"] for c in doc["checks"])
    assert all(row["oracle_plays"] == row["bang_bool_plays"] for row in doc["isomorphism"])


def test_games_check_byte_determinism(tmp_path):
    _, _, out1 = run_cli(["games-check", "--max-n", "2", "--seed", "9"], tmp_path, "a.json")
    _, _, out2 = run_cli(["games-check", "--max-n", "2", "--seed", "9"], tmp_path, "b.json")
    assert out1.read_bytes() == out2.read_bytes()


def test_influence_random_corpus(tmp_path):
    code, doc, _ = run_cli(
        [
            "influence",
            "--random-corpus",
            "4",
            "--N",
            "16",
            "--L",
            "2",
            "--depth",
            "3",
            "--eps",
            "0.2",
            "--delta",
            "0.2",
            "--sample-cap",
            "256",
            "--seed",
            "3",
        ],
        tmp_path,
    )
    assert code == 0
    assert doc["ok"] is True
    assert len(doc["instances"]) == 4


def test_influence_corpus_file(tmp_path):
    corpus = tmp_path / "trees.txt"
    corpus.write_text(
        "# two instances\n"
        "node 1 (leaf 0) (leaf 1)\n"
        "leaf 1\n"
        "\n"
        "node 2 (leaf 0) (node 3 (leaf 0) (leaf 1))\n"
    )
    code, doc, _ = run_cli(
        [
            "influence",
            "--corpus",
            str(corpus),
            "--N",
            "8",
            "--depth",
            "2",
            "--eps",
            "0.2",
            "--delta",
            "0.2",
            "--seed",
            "4",
        ],
        tmp_path,
    )
    assert code == 0
    assert len(doc["instances"]) == 2
    assert doc["instances"][0]["L"] == 2


def test_collide_small(tmp_path):
    code, doc, _ = run_cli(
        [
            "collide",
            "--n",
            "8",
            "--N",
            "32",
            "--q",
            "3",
            "--p",
            "4",
            "--delta",
            "0.25",
            "--trials",
            "6",
            "--sample-cap",
            "64",
            "--seed",
            "7",
        ],
        tmp_path,
    )
    assert code == 0
    assert doc["success_rate"] >= 0.8
    assert len(doc["trials"]) == 6
    assert "wall_ms" not in doc["trials"][0]


def test_collide_csv_and_determinism(tmp_path):
    args = [
        "collide",
        "--n",
        "8",
        "--N",
        "32",
        "--q",
        "3",
        "--p",
        "4",
        "--delta",
        "0.25",
        "--trials",
        "3",
        "--sample-cap",
        "64",
        "--seed",
        "11",
    ]
    _, _, out1 = run_cli(args + ["--csv", str(tmp_path / "t.csv")], tmp_path, "a.json")
    _, _, out2 = run_cli(args, tmp_path, "b.json")
    assert out1.read_bytes() == out2.read_bytes()
    csv_text = (tmp_path / "t.csv").read_text()
    assert csv_text.startswith("trial,")
    assert len(csv_text.strip().splitlines()) == 4


def test_forge_reports_matches(tmp_path):
    # N=32 is small enough that the 0.1 query-distance margin is tight;
    # allow one near-miss in four trials
    code, doc, _ = run_cli(
        [
            "forge",
            "--n",
            "8",
            "--N",
            "32",
            "--q",
            "3",
            "--p",
            "4",
            "--delta",
            "0.25",
            "--trials",
            "4",
            "--sample-cap",
            "64",
            "--min-success-rate",
            "0.7",
            "--seed",
            "2",
        ],
        tmp_path,
    )
    assert code == 0
    assert doc["forgeries_attempted"] >= 1
    assert doc["forgeries_matched"] == doc["forgeries_attempted"]


def test_prf_distinguish(tmp_path):
    code, doc, _ = run_cli(
        [
            "prf-distinguish",
            "--n",
            "6",
            "--trials",
            "300",
            "--adversary",
            "all",
            "--max-advantage",
            "0.25",
            "--seed",
            "5",
        ],
        tmp_path,
    )
    assert code == 0
    assert {r["adversary"] for r in doc["results"]} == {
        "constant-one",
        "first-bit",
        "tag-parity",
        "replay-consistency",
        "coordinate-freshness",
    }
    for r in doc["results"]:
        assert 0 <= r["advantage_estimate"] <= 0.25
        assert r["trials"] == 300


def test_prf_distinguish_single_adversary_deterministic(tmp_path):
    args = [
        "prf-distinguish",
        "--n",
        "4",
        "--trials",
        "100",
        "--adversary",
        "first-bit",
        "--seed",
        "8",
    ]
    _, _, out1 = run_cli(args, tmp_path, "a.json")
    _, _, out2 = run_cli(args, tmp_path, "b.json")
    assert out1.read_bytes() == out2.read_bytes()


def test_prf_hex_key_variant(tmp_path):
    code, doc, _ = run_cli(
        [
            "prf-distinguish",
            "--n",
            "4",
            "--trials",
            "50",
            "--adversary",
            "first-bit",
            "--prf",
            "hex:deadbeef",
            "--max-advantage",
            "0.5",
            "--seed",
            "5",
        ],
        tmp_path,
    )
    assert code == 0


# --- config errors ---


def test_malformed_polynomial_exits_2(tmp_path):
    code = main(
        ["prf-distinguish", "--n", "4", "--trials", "10", "--sessions", "1.5x", "--seed", "1"]
    )
    assert code == 2


def test_bad_subcommand_exits_2():
    assert main(["frobnicate"]) == 2


def test_influence_needs_exactly_one_corpus():
    assert main(["influence", "--seed", "1"]) == 2


def test_collide_rejects_bad_N():
    assert main(["collide", "--n", "8", "--N", "48", "--seed", "1"]) == 2


def test_bad_prf_spec_exits_2():
    assert (
        main(
            [
                "prf-distinguish",
                "--n",
                "4",
                "--trials",
                "10",
                "--prf",
                "nonsense",
                "--seed",
                "1",
            ]
        )
        == 2
    )


def test_env_seed_default(tmp_path, monkeypatch):
    monkeypatch.setenv("PARAMGAME_SEED", "123")
    code, doc, _ = run_cli(["games-check", "--max-n", "1"], tmp_path)
    assert code == 0
    assert doc["config"]["seed"] == 123


def test_console_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "paramgame.cli", "games-check", "--max-n", "1", "--seed", "0"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    json.loads(result.stdout)


def test_dump_transcript(tmp_path):
    path = tmp_path / "transcript.txt"
    code, _, _ = run_cli(
        ["games-check", "--max-n", "1", "--seed", "0", "--dump-transcript", str(path)],
        tmp_path,
    )
    assert code == 0
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 4
    assert all(len(line.split(" ")) == 4 for line in lines)
