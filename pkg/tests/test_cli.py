from __future__ import annotations

import math
from pathlib import Path

import pytest

from hexmem.analysis import read_stats, write_stats, StatsRecord
from hexmem.cli import main


def test_generate_writes_parseable_circuit(tmp_path, capsys):
    out = tmp_path / "c.stim"
    rc = main(["generate", "--model", "em3", "--w", "4", "--h", "6",
               "--obs", "v", "--rounds", "100", "--out", str(out)])
    assert rc == 0
    text = out.read_text()
    assert "QUBIT_COORDS(4, 3) 23" in text
    assert "REPEAT 48 {" in text
    from hexmem.circuit import parse_circuit
    assert parse_circuit(text).num_measurements == 4336


def test_generate_golden_check_passes(tmp_path, capsys):
    rc = main(["generate", "--model", "em3", "--w", "4", "--h", "6",
               "--obs", "v", "--rounds", "100", "--out",
               str(tmp_path / "x.stim"), "--golden-check"])
    assert rc == 0
    assert "match" in capsys.readouterr().out


def test_generate_sd6_has_ancillas_and_cx(tmp_path):
    out = tmp_path / "sd6.stim"
    rc = main(["generate", "--model", "sd6", "--w", "2", "--h", "3",
               "--obs", "v", "--rounds", "6", "--p", "0.001",
               "--out", str(out)])
    assert rc == 0
    text = out.read_text()
    assert "CX" in text and "DEPOLARIZE2(0.001)" in text
    assert "MPP" not in text


def test_missing_flags_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--model", "em3"])
    assert exc.value.code == 2


def test_invalid_config_returns_2(tmp_path):
    rc = main(["generate", "--model", "em3", "--w", "1", "--h", "6",
               "--obs", "v", "--rounds", "6"])
    assert rc == 2


def test_distance_single_cells(capsys, tmp_path):
    out = tmp_path / "d.csv"
    rc = main(["distance", "--models", "em3", "--sizes", "3,6",
               "--orientations", "v", "--geometry", "straight",
               "--out", str(out)])
    assert rc == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "model,orientation,size,geometry,distance"
    assert rows[1].endswith(",1") and rows[2].endswith(",2")


def test_distance_w2_is_one(capsys):
    rc = main(["distance", "--models", "em3,sd6", "--sizes", "2",
               "--orientations", "h", "--geometry", "straight"])
    assert rc == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if "->" in l]
    assert all(l.strip().endswith("1") for l in lines)


def test_benchmark_writes_and_is_idempotent(tmp_path, capsys):
    out = tmp_path / "stats.csv"
    args = ["benchmark", "--models", "em3", "--p", "0.02",
            "--sizes", "2x3", "--obs", "both", "--shots", "2000",
            "--rounds", "6", "--seed", "3", "--out", str(out)]
    assert main(args) == 0
    first = read_stats(out)
    assert len(first) == 2  # H and V
    assert all(r.shots >= 1000 for r in first)
    assert main(args) == 0  # rerun: no duplicates
    assert read_stats(out) == first


def test_benchmark_zero_noise_records_zero_errors(tmp_path):
    out = tmp_path / "stats0.csv"
    rc = main(["benchmark", "--models", "em3", "--p", "0", "--sizes", "2x3",
               "--obs", "v", "--shots", "512", "--rounds", "6",
               "--out", str(out)])
    assert rc == 0
    (rec,) = read_stats(out)
    assert rec.errors == 0 and rec.shots == 512


def test_fit_recovers_synthetic_lambda(tmp_path, capsys):
    # Synthesize both observables so combined rates reproduce lambda = 4.
    lam = 4.0
    records = []
    shots = 10**9  # exact rates, negligible binomial wobble
    for d in (2, 3, 4, 5):
        cell = 0.05 * lam ** (-d / 2)
        # Split the combined rate evenly between H and V, undoing Eq. 1.
        half = 1 - math.sqrt(1 - cell)
        rounds = 3 * d if (3 * d) % 2 == 0 else 3 * d + 1
        shot_rate = (1 - (1 - 2 * half) ** (rounds / d)) / 2
        for obs in "HV":
            records.append(StatsRecord(
                "em3", 1e-3, 2 * d, 3 * d, "straight", obs, d, rounds,
                shots, round(shot_rate * shots)))
    stats = tmp_path / "s.csv"
    write_stats(stats, records)
    rc = main(["fit", "--stats", str(stats), "--out-dir",
               str(tmp_path / "fits"), "--fast"])
    assert rc == 0
    out = capsys.readouterr().out
    lam_line = next(l for l in out.splitlines() if "lambda =" in l)
    value = float(lam_line.split("lambda =")[1].split()[0])
    assert abs(value - lam) / lam < 0.05
    assert (tmp_path / "fits" / "lambdas.csv").exists()
    assert (tmp_path / "fits" / "teraquop.svg").read_text().startswith("<svg")


def test_fit_empty_csv_reports_no_groups(tmp_path, capsys):
    stats = tmp_path / "empty.csv"
    write_stats(stats, [])
    rc = main(["fit", "--stats", str(stats), "--out-dir", str(tmp_path / "f")])
    assert rc == 0
    assert "no groups" in capsys.readouterr().out


def test_plot_writes_svg(tmp_path):
    stats = tmp_path / "s.csv"
    write_stats(stats, [
        StatsRecord("em3", 0.01, 4, 6, "straight", "H", 2, 6, 1000, 17),
        StatsRecord("em3", 0.01, 4, 6, "straight", "V", 2, 6, 1000, 21),
    ])
    out = tmp_path / "rates.svg"
    rc = main(["plot", "--stats", str(stats), "--out", str(out)])
    assert rc == 0
    assert out.read_text().startswith("<svg")
