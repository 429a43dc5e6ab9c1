import json

import numpy as np
import pytest

from evbreak.cli import main, read_dataset
from evbreak.errors import DataError


def write_flow_file(path, with_year):
    rng = np.random.default_rng(90)
    lines = ["year,Q,V" if with_year else "Q,V"]
    for i in range(24):
        q, v = rng.random(2).round(3)
        prefix = f"{1950 + i}," if with_year else ""
        lines.append(f"{prefix}{q},{v}")
    na1 = "1954,NA,0.4" if with_year else "NA,0.4"
    na2 = "1960,0.2,NA" if with_year else "0.2,NA"
    lines[5], lines[11] = na1, na2
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def data_file(tmp_path):
    return write_flow_file(tmp_path / "flows.csv", with_year=False)


@pytest.fixture
def year_file(tmp_path):
    return write_flow_file(tmp_path / "flows_year.csv", with_year=True)


@pytest.fixture
def config_file(tmp_path):
    cfg = {
        "name": "cli-tiny",
        "replications": 2,
        "B": 25,
        "seed": 5,
        "cells": [
            {"label": "null", "n": 30, "segments": [{"copula": {"family": "gumbel", "tau": 0.5}}]}
        ],
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


class TestReadDataset:
    def test_basic_parse(self, data_file):
        sample, info = read_dataset(data_file)
        assert sample.values.shape == (22, 2)
        assert info["columns"] == ["Q", "V"]
        assert info["rows_used"] == 22 and info["rows_dropped"] == 2

    def test_index_column(self, year_file):
        sample, info = read_dataset(year_file, index_col="year")
        assert sample.values.shape == (22, 2)
        assert info["columns"] == ["Q", "V"]
        assert info["rows_dropped"] == 2
        assert sample.labels[0] == "1950"
        assert "1954" not in sample.labels  # the NA row is gone
        assert len(info["sha256"]) == 64

    def test_row_numbers_when_no_index(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n3,4\n5,6\n7,8\n9,10\n11,12\n13,14\n15,16\n")
        sample, info = read_dataset(path)
        assert sample.values.shape == (8, 2)
        assert list(sample.labels) == [str(i) for i in range(1, 9)]

    def test_semicolon_sniffed(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a;b\n" + "\n".join(f"{i};{i + 0.5}" for i in range(8)) + "\n")
        sample, info = read_dataset(path)
        assert info["delimiter"] == ";"
        assert sample.values.shape == (8, 2)

    def test_explicit_delimiter(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("a\tb\n" + "\n".join(f"{i}\t{i}" for i in range(8)) + "\n")
        sample, _ = read_dataset(path, delimiter="\t")
        assert sample.values.shape == (8, 2)

    def test_bom_tolerated(self, tmp_path):
        path = tmp_path / "d.csv"
        body = "a,b\n" + "\n".join(f"{i},{i}" for i in range(8)) + "\n"
        path.write_bytes(b"\xef\xbb\xbf" + body.encode())
        sample, _ = read_dataset(path)
        assert sample.values.shape == (8, 2)

    def test_custom_missing_token(self, tmp_path):
        path = tmp_path / "d.csv"
        rows = [f"{i},{i}" for i in range(9)]
        rows[4] = "-999,3"
        path.write_text("a,b\n" + "\n".join(rows) + "\n")
        sample, info = read_dataset(path, missing="-999")
        assert sample.values.shape == (8, 2)
        assert info["rows_dropped"] == 1

    def test_error_messages(self, tmp_path, data_file):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n" + "\n".join(f"{i},{i}" for i in range(7)) + "\nx,1\n")
        with pytest.raises(DataError, match="row 9.*'x'"):
            read_dataset(path)
        short = tmp_path / "short.csv"
        short.write_text("a,b\n1,2\n3,4\n")
        with pytest.raises(DataError, match="need at least 8"):
            read_dataset(short)
        ragged = tmp_path / "ragged.csv"
        ragged.write_text("a,b\n1,2\n3\n")
        with pytest.raises(DataError, match="row 3 has 1 fields"):
            read_dataset(ragged)
        with pytest.raises(DataError, match="index column"):
            read_dataset(data_file, index_col="year")
        narrow = tmp_path / "one.csv"
        narrow.write_text("a\n" + "\n".join(str(i) for i in range(8)) + "\n")
        with pytest.raises(DataError, match="two data columns"):
            read_dataset(narrow)
        with pytest.raises(DataError, match="cannot read"):
            read_dataset(tmp_path / "missing.csv")


class TestCliTest:
    def run(self, *argv):
        return main(list(argv))

    def test_stdout_report(self, data_file, capsys):
        code = self.run("test", str(data_file), "--B", "50", "--seed", "3")
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["result"]["n"] == 22 and payload["result"]["d"] == 2
        assert payload["settings"]["B"] == 50
        assert isinstance(payload["result"]["reject"], bool)
        assert 0.0 <= payload["result"]["p_value"] <= 1.0
        assert len(payload["pickands_segments"]) == 1
        assert len(payload["pickands_segments"][0]["values"]) == 9

    def test_report_file_byte_identical_rerun(self, year_file, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        args = ("test", str(year_file), "--B", "50", "--seed", "3", "--index-col", "year")
        assert self.run(*args, "--out", str(out1)) == 0
        assert self.run(*args, "--out", str(out2)) == 0
        a = (out1 / "report.json").read_bytes()
        assert a == (out2 / "report.json").read_bytes()
        payload = json.loads(a)
        assert payload["result"]["break_label"].startswith("19")

    def test_plot_data_files(self, data_file, tmp_path):
        out = tmp_path / "r"
        code = self.run(
            "test", str(data_file), "--B", "20", "--seed", "1",
            "--break", "0.5", "--out", str(out), "--plot-data",
        )
        assert code == 0
        field = (out / "cusum_field.csv").read_text().splitlines()
        assert field[0] == "k,s,t,value"
        assert len(field) == 1 + 21 * 9  # n=22 splits times 9 grid points
        curves = (out / "pickands_curves.csv").read_text().splitlines()
        assert curves[0] == "segment,row_start,row_end,t,value"
        assert len(curves) == 1 + 2 * 9  # break at 0.5: two segments
        report = json.loads((out / "report.json").read_text())
        assert report["settings"]["breaks"] == [0.5]
        assert len(report["pickands_segments"]) == 2

    def test_plot_data_requires_out(self, data_file, capsys):
        assert self.run("test", str(data_file), "--plot-data") == 1
        assert "--plot-data requires --out" in capsys.readouterr().err

    def test_grid_flag(self, data_file, capsys):
        code = self.run("test", str(data_file), "--B", "20", "--seed", "1", "--grid", "0.25,0.5,0.75")
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["settings"]["grid"] == [0.25, 0.5, 0.75]

    def test_exit_codes(self, data_file, tmp_path, capsys):
        assert self.run("test", str(tmp_path / "nope.csv")) == 2  # unreadable file
        assert self.run("test", str(data_file), "--break", "1.5") == 2
        assert self.run("test", str(data_file), "--kstar", "22") == 2
        assert self.run("test", str(data_file), "--grid", "0.5,2.0") == 2
        assert self.run("test", str(data_file), "--B", "20", "--bandwidth", "0.6") == 3
        assert self.run("test", str(data_file), "--bandwidth", "-1") == 1
        assert self.run("test", str(data_file), "--bandwidth", "wide") == 1
        assert self.run() == 1  # missing subcommand
        assert self.run("test") == 1  # missing data argument
        assert self.run("test", str(data_file), "--bogus") == 1
        capsys.readouterr()

    def test_grid_rejected_for_trivariate(self, tmp_path, capsys):
        path = tmp_path / "t.csv"
        rng = np.random.default_rng(4)
        rows = "\n".join(",".join(f"{v:.4f}" for v in rng.random(3)) for _ in range(12))
        path.write_text("a,b,c\n" + rows + "\n")
        assert self.run("test", str(path), "--B", "10", "--grid", "0.5") == 2
        assert "bivariate" in capsys.readouterr().err

    def test_help_exits_zero(self, capsys):
        assert self.run("--help") == 0
        assert "simulate" in capsys.readouterr().out


class TestCliSimulate:
    def run(self, *argv):
        return main(list(argv))

    def test_config_file_run(self, config_file, tmp_path, capsys):
        out = tmp_path / "res"
        assert self.run("simulate", str(config_file), "--out", str(out)) == 0
        assert "experiment: cli-tiny" in capsys.readouterr().out
        text = (out / "results.csv").read_text()
        assert text.startswith("label,n,variant,replications,rejections,rate,std_error\n")
        assert text.count("\n") == 2

    def test_rerun_byte_identical(self, config_file, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        self.run("simulate", str(config_file), "--out", str(out1))
        self.run("simulate", str(config_file), "--out", str(out2), "--workers", "2")
        assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()

    def test_overrides(self, config_file, capsys):
        assert self.run("simulate", str(config_file), "--replications", "3", "--B", "10", "--seed", "1") == 0
        head = capsys.readouterr().out.splitlines()[0]
        assert "B=10" in head and "seed=1" in head

    def test_packaged_config(self, capsys):
        code = self.run("simulate", "table1_reduced", "--replications", "2", "--B", "20")
        assert code == 0
        out = capsys.readouterr().out
        assert "experiment:" in out

    def test_unknown_config(self, capsys):
        assert self.run("simulate", "no_such_config") == 2
        assert "neither a file nor a packaged config" in capsys.readouterr().err

    def test_schema_errors(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"replications": 0, "cells": []}))
        assert self.run("simulate", str(path)) == 2
        err = capsys.readouterr().err
        assert "$.cells" in err and "$.replications" in err
        path.write_text("{broken")
        assert self.run("simulate", str(path)) == 2
