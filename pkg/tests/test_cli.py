"""Command line behavior: subcommands, exit codes, output stability."""

from ldsaud.cli import main
from ldsaud.harness import CSV_HEADER, read_csv


class TestFixturesCommand:
    def test_search_space_reference_value(self, capsys):
        rc = main(["fixtures", "--search-space", "--lambda", "0.1",
                   "--wr", "4", "--ls", "39"])
        assert rc == 0
        assert capsys.readouterr().out.strip() == "85.8"

    def test_matrix_golden(self, capsys):
        assert main(["fixtures", "--matrix"]) == 0
        out = capsys.readouterr().out
        assert out == (
            "4 6\n"
            "1 1 1 0 0 0\n"
            "1 0 0 1 1 0\n"
            "0 1 0 1 0 1\n"
            "0 0 1 0 1 1\n"
        )

    def test_zc_table_stable_and_ideal(self, capsys):
        assert main(["fixtures", "--zc-table"]) == 0
        first = capsys.readouterr().out
        assert main(["fixtures", "--zc-table"]) == 0
        second = capsys.readouterr().out
        assert first == second
        lines = first.strip().splitlines()[1:]
        assert lines[0].split() == ["0", "1.000000000000"]
        for line in lines[1:]:
            assert float(line.split()[1]) < 1e-9

    def test_requires_a_selection(self):
        assert main(["fixtures"]) == 1


class TestValidateCommand:
    def test_valid_file(self, tmp_path):
        path = tmp_path / "ok.cfg"
        path.write_text("trials = 5\nlambda = 0.1\n")
        assert main(["validate", "--config", str(path)]) == 0

    def test_invalid_sparsity_exits_one_naming_key(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("lambda = 0\n")
        assert main(["validate", "--config", str(path)]) == 1
        assert "lambda" in capsys.readouterr().err

    def test_missing_file(self):
        assert main(["validate", "--config", "/nonexistent.cfg"]) == 1


class TestArgumentErrors:
    def test_unknown_flag_exits_one(self):
        assert main(["sweep", "--bogus"]) == 1

    def test_unknown_subcommand_exits_one(self):
        assert main(["frobnicate"]) == 1


class TestTrialCommand:
    def test_verbose_dump_lists_stages(self, capsys):
        rc = main(["trial", "--verbose", "--detector", "tl-mpa",
                   "--lambda", "0.1", "--snr", "10", "--seed", "4",
                   "--trials", "1"])
        assert rc == 0
        out = capsys.readouterr().out
        for field in ("R ", "busy", "loads", "superset", "refined", "counts"):
            assert field in out


class TestSweepCommand:
    def test_writes_contract_csv(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        rc = main(["sweep", "--detector", "tl-mpa", "--detector", "omp-mpa",
                   "--lambda", "0.1", "--snr", "8:2:10", "--trials", "25",
                   "--seed", "3", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        rows = read_csv(out)
        assert {(r.detector, r.snr_db) for r in rows} == {
            ("tl-mpa", 8.0), ("tl-mpa", 10.0), ("omp-mpa", 8.0), ("omp-mpa", 10.0)}

    def test_deterministic_output_bytes(self, tmp_path):
        args = ["sweep", "--detector", "tl-mpa", "--lambda", "0.1",
                "--snr", "10", "--trials", "20", "--seed", "3"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_text() == b.read_text()

    def test_baseline_arrangement_rows(self, tmp_path):
        # the standard comparison set: one row per detector x SNR point
        out = tmp_path / "fig.csv"
        rc = main(["sweep", "--config", str(_fig_cfg(tmp_path)), "--out", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert {r.detector for r in rows} == {
            "cover-mpa", "mpa", "tl-mpa", "omp-mpa", "amp-mpa"}
        assert len(rows) == 10


def _fig_cfg(tmp_path):
    path = tmp_path / "fig.cfg"
    path.write_text(
        "detectors = cover-mpa mpa tl-mpa omp-mpa amp-mpa\n"
        "lambda = 0.1\n"
        "snr_db = 6 10\n"
        "trials = 8\n"
        "seed = 11\n"
    )
    return path
