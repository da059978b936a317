"""Tests for the command-line interface."""
import csv

import pytest

from kfino.cli import BENCH_HEADER, CALIBRATION_HEADER, ESTIMATOR_HEADER, main

SERIES = "t,y\n0,40\n1,40.5\n2.5,95\n3,41\n4,40.8\n"


def write(tmp_path, name, content):
    path = tmp_path / name
    path.write_text(content, encoding="utf-8")
    return str(path)


def read_rows(path):
    with open(path, encoding="utf-8", newline="") as handle:
        return list(csv.reader(handle))


class TestFilterCommands:
    """filter, smooth and compare."""

    def test_single_observation(self, tmp_path, capsys):
        series = write(tmp_path, "one.csv", "t,y\n0,40\n")
        out = str(tmp_path / "out.csv")
        assert main(["filter", "-i", series, "-o", out]) == 0
        rows = read_rows(out)
        assert tuple(rows[0]) == ESTIMATOR_HEADER
        assert float(rows[1][2]) == pytest.approx(0.94961, abs=1e-5)
        assert rows[1][3] == "1"
        assert capsys.readouterr().out.startswith("loglik=")

    def test_certain_inliers(self, tmp_path):
        series = write(tmp_path, "series.csv", SERIES)
        config = write(tmp_path, "run.conf", "p = 1\n")
        out = str(tmp_path / "out.csv")
        assert main(["filter", "--config", config, "-i", series, "-o", out]) == 0
        assert [row[3] for row in read_rows(out)[1:]] == ["1"] * 5

    def test_outlier_is_flagged(self, tmp_path):
        series = write(tmp_path, "series.csv", SERIES)
        out = str(tmp_path / "out.csv")
        assert main(["filter", "-i", series, "-o", out, "--beam", "8"]) == 0
        flags = [row[3] for row in read_rows(out)[1:]]
        assert flags[2] == "0"

    def test_out_of_range_rows_dropped(self, tmp_path):
        series = write(tmp_path, "series.csv", SERIES)
        out = str(tmp_path / "out.csv")
        assert main(["filter", "-i", series, "-o", out, "--oor", "10,90"]) == 0
        assert [row[0] for row in read_rows(out)[1:]] == ["0", "1", "3", "4"]

    def test_smooth_ends_with_filter(self, tmp_path):
        series = write(tmp_path, "series.csv", SERIES)
        filtered = str(tmp_path / "filtered.csv")
        smoothed = str(tmp_path / "smoothed.csv")
        assert main(["filter", "-i", series, "-o", filtered, "--kappa", "3"]) == 0
        assert main(["smooth", "-i", series, "-o", smoothed, "--kappa", "3"]) == 0
        assert read_rows(smoothed)[-1] == read_rows(filtered)[-1]
        assert len(read_rows(smoothed)) == 6

    def test_compare_agrees_without_outliers(self, tmp_path, capsys):
        series = write(tmp_path, "series.csv", SERIES)
        config = write(tmp_path, "run.conf", "p = 1\n")
        out = str(tmp_path / "out.csv")
        assert main(["compare", "--config", config, "-i", series, "-o", out]) == 0
        for row in read_rows(out)[1:]:
            assert float(row[4]) == pytest.approx(float(row[7]), abs=1e-9)
        printed = capsys.readouterr().out.splitlines()
        assert printed[0].startswith("loglik_kfino=")
        assert printed[1].startswith("loglik_kalman=")
        assert float(printed[0].split("=")[1]) == pytest.approx(float(printed[1].split("=")[1]), abs=1e-9)


class TestSimulate:
    """simulate."""

    def test_same_seed_same_bytes(self, tmp_path):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        assert main(["simulate", "--seed", "4", "-o", str(first)]) == 0
        assert main(["simulate", "--seed", "4", "-o", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()
        assert (tmp_path / "a.truth.csv").read_bytes() == (tmp_path / "b.truth.csv").read_bytes()

    def test_output_feeds_filter(self, tmp_path):
        config = write(tmp_path, "run.conf", "horizon = 20\nbeam = 16\nexact_prefix = 4\n")
        simulated = str(tmp_path / "sim.csv")
        truth = str(tmp_path / "truth.csv")
        assert main(["simulate", "--config", config, "-o", simulated, "--truth", truth]) == 0
        out = str(tmp_path / "out.csv")
        assert main(["filter", "--config", config, "-i", simulated, "-o", out]) == 0
        assert len(read_rows(out)) == len(read_rows(truth))
        assert read_rows(truth)[0] == ["t", "x", "z"]


class TestCalibrate:
    """calibrate."""

    def test_zero_iterations(self, tmp_path):
        series = write(tmp_path, "series.csv", SERIES)
        config = write(tmp_path, "run.conf", "em_max_iters = 0\n")
        out = str(tmp_path / "out.csv")
        assert main(["calibrate", "--config", config, "-i", series, "-o", out, "--exact"]) == 0
        lines = (tmp_path / "out.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(CALIBRATION_HEADER)
        assert lines[1].startswith("0,40,60,0.5,")
        assert lines[2:] == ["converged=false"]

    def test_iterations_are_listed(self, tmp_path):
        series = write(tmp_path, "series.csv", SERIES)
        config = write(tmp_path, "run.conf", "em_max_iters = 3\nem_exact = true\n")
        out = str(tmp_path / "out.csv")
        assert main(["calibrate", "--config", config, "-i", series, "-o", out]) == 0
        lines = (tmp_path / "out.csv").read_text(encoding="utf-8").splitlines()
        table = [line for line in lines[1:] if line[0].isdigit()]
        assert [line.split(",")[0] for line in table] == [str(i) for i in range(len(table))]
        assert 2 <= len(table) <= 4
        assert lines[-1] in ("converged=true", "converged=false")


class TestBench:
    """bench."""

    def test_table_shape(self, tmp_path):
        config = write(
            tmp_path, "run.conf",
            "rate = 0.5\nhorizon = 10\nbeam = 8\nexact_prefix = 3\nworkers = 2\n",
        )
        out = str(tmp_path / "out.csv")
        argv = ["bench", "--config", config, "--sweep", "p", "--values", "0.5,1",
                "--replicates", "2", "-o", out]
        assert main(argv) == 0
        rows = read_rows(out)
        assert tuple(rows[0]) == BENCH_HEADER
        assert len(rows) == 1 + 2 * 2 * 2
        assert [(row[1], row[2], row[3]) for row in rows[1:3]] == [
            ("0.5", "kfino", "mse"), ("0.5", "kfino", "accuracy"),
        ]
        assert all(int(row[9]) + int(row[10]) == 2 for row in rows[1:])

    def test_invalid_grid_value(self, tmp_path):
        out = str(tmp_path / "out.csv")
        argv = ["bench", "--sweep", "kappa", "--values", "0", "--replicates", "1", "-o", out]
        assert main(argv) == 1


class TestErrors:
    """Exit codes and configuration handling."""

    def test_missing_input(self, tmp_path):
        assert main(["filter", "-i", str(tmp_path / "absent.csv"), "-o", str(tmp_path / "o.csv")]) == 1

    def test_unordered_series(self, tmp_path, caplog):
        series = write(tmp_path, "series.csv", "t,y\n1,40\n0,41\n")
        assert main(["filter", "-i", series, "-o", str(tmp_path / "o.csv")]) == 1
        assert "row 3" in caplog.text

    def test_unknown_config_key(self, tmp_path):
        series = write(tmp_path, "series.csv", SERIES)
        config = write(tmp_path, "run.conf", "beams = 4\n")
        assert main(["filter", "--config", config, "-i", series, "-o", str(tmp_path / "o.csv")]) == 1

    def test_beam_and_kappa_exclusive(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["filter", "-i", "x.csv", "-o", "y.csv", "--beam", "4", "--kappa", "2"])
        assert excinfo.value.code == 2

    def test_dump_config_reflects_overrides(self, tmp_path):
        series = write(tmp_path, "series.csv", SERIES)
        config = write(tmp_path, "run.conf", "seed = 3\nkappa = 4\n")
        dumped = tmp_path / "effective.conf"
        argv = ["filter", "--config", config, "--seed", "8", "--beam", "32",
                "-i", series, "-o", str(tmp_path / "o.csv"), "--dump-config", str(dumped)]
        assert main(argv) == 0
        text = dumped.read_text(encoding="utf-8")
        assert "seed = 8\n" in text
        assert "beam = 32\n" in text
        assert "kappa" not in text
