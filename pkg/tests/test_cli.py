"""End-to-end tests of the command-line interface."""

import csv
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from wcosinor.basis import basis_matrix, theta_to_amplitude_phase
from wcosinor.cli import (
    EXIT_CONFIG,
    EXIT_INGESTION,
    EXIT_NUMERIC,
    EXIT_OK,
    compare_statistics,
    main,
)
from wcosinor.design import compute_weights, select_kappa
from wcosinor.errors import UndefinedSlopeError
from wcosinor.inference import screen_panel
from wcosinor.kde import CircularKde, loo_folds
from wcosinor.panel import TimeSeriesPanel, ingest_csv, write_panel, write_time_csv
from wcosinor.regression import fit
from wcosinor.simulate import equispaced_times, sample_von_mises


def make_panel_file(tmp_path, name="panel.csv", n=30, seed=0, extra_rows=()):
    rng = np.random.default_rng(seed)
    t = np.sort(sample_von_mises(0.0, 1.0, rng, n) * 12.0 / math.pi)
    b = basis_matrix(t, 1)
    rows = {
        "G_RHYTHM": b @ np.array([6.0, 0.4, 0.9]) + rng.normal(0, 1, n),
        "G_FLAT": 5.0 + rng.normal(0, 1, n),
    }
    for gid, row in extra_rows:
        rows[gid] = row(t) if callable(row) else row
    panel = TimeSeriesPanel(
        times=t, gene_ids=list(rows), expr=np.array(list(rows.values()))
    )
    path = tmp_path / name
    write_panel(panel, path)
    return path, panel


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def svg_series_ids(path):
    root = ET.parse(path).getroot()  # raises on malformed XML
    return {el.get("id") for el in root.iter() if el.get("id")}


def run_twice_and_compare(tmp_path, argv_builder, files):
    """Run a command into two directories and require identical bytes."""
    dirs = []
    for sub in ("run_a", "run_b"):
        out = tmp_path / sub
        assert main(argv_builder(str(out))) == EXIT_OK
        dirs.append(out)
    for name in files:
        a = (dirs[0] / name).read_bytes()
        b = (dirs[1] / name).read_bytes()
        assert a == b, f"{name} differs between reruns"
    return dirs[0]


class TestKappaCommand:
    def test_equispaced_times_hit_the_bound(self, tmp_path, capsys):
        tfile = tmp_path / "t.csv"
        write_time_csv(equispaced_times(24), tfile)
        out = tmp_path / "out"
        assert main(["kappa", "--times", str(tfile), "--out", str(out)]) == EXIT_OK
        result = json.loads((out / "kappa_result.json").read_text())
        assert result["criterion_value"] == pytest.approx(0.25, abs=1e-6)
        assert result["bound"] == 0.25
        assert "kappa_opt" in capsys.readouterr().out

    def test_trace_csv_is_monotone_in_kappa(self, tmp_path):
        tfile = tmp_path / "t.csv"
        rng = np.random.default_rng(1)
        write_time_csv(sample_von_mises(0, 1, rng, 20) * 12 / math.pi, tfile)
        out = tmp_path / "out"
        assert main(["kappa", "--times", str(tfile), "--out", str(out)]) == EXIT_OK
        rows = read_rows(out / "kappa_trace.csv")
        kappas = [float(r["kappa"]) for r in rows]
        assert kappas == sorted(kappas)
        assert len(kappas) >= 60

    def test_byte_identical_reruns(self, tmp_path):
        tfile = tmp_path / "t.csv"
        rng = np.random.default_rng(2)
        write_time_csv(sample_von_mises(0, 1, rng, 16) * 12 / math.pi, tfile)
        run_twice_and_compare(
            tmp_path,
            lambda out: ["kappa", "--times", str(tfile), "--out", out],
            ["kappa_trace.csv", "kappa_result.json", "kappa_trace.svg", "metadata.json"],
        )

    def test_svg_declares_its_series(self, tmp_path):
        tfile = tmp_path / "t.csv"
        write_time_csv(equispaced_times(12), tfile)
        out = tmp_path / "out"
        assert main(["kappa", "--times", str(tfile), "--out", str(out)]) == EXIT_OK
        ids = svg_series_ids(out / "kappa_trace.svg")
        assert {"series-criterion", "series-bound", "series-unweighted"} <= ids

    def test_panel_as_time_input(self, tmp_path):
        ppath, panel = make_panel_file(tmp_path, seed=20)
        out = tmp_path / "out"
        assert main(["kappa", "--panel", str(ppath), "--out", str(out)]) == EXIT_OK
        result = json.loads((out / "kappa_result.json").read_text())
        assert result["n_samples"] == panel.n_samples


class TestFitCommand:
    def test_noiseless_gene_recovers_construction(self, tmp_path):
        t = equispaced_times(24)
        theta = np.array([6.0, -0.3, 0.7])
        panel = TimeSeriesPanel(
            times=t,
            gene_ids=["PURE"],
            expr=(basis_matrix(t, 1) @ theta)[None, :],
        )
        ppath = tmp_path / "p.csv"
        write_panel(panel, ppath)
        out = tmp_path / "out"
        assert main(["fit", "--panel", str(ppath), "--out", str(out)]) == EXIT_OK
        (rec,) = json.loads((out / "fits.json").read_text())
        ap = theta_to_amplitude_phase(theta)
        assert rec["mesor"] == pytest.approx(6.0, abs=1e-9)
        assert rec["harmonics"][0]["amplitude"] == pytest.approx(
            ap.amplitudes[0], abs=1e-9
        )
        assert rec["harmonics"][0]["phase"] == pytest.approx(ap.phases[0], abs=1e-9)

    def test_weighted_on_equispaced_design_matches_unweighted(self, tmp_path):
        rng = np.random.default_rng(3)
        t = equispaced_times(24)
        panel = TimeSeriesPanel(
            times=t,
            gene_ids=["G"],
            expr=(6 + np.cos(math.pi * t / 12) + rng.normal(0, 1, 24))[None, :],
        )
        ppath = tmp_path / "p.csv"
        write_panel(panel, ppath)
        out_u, out_w = tmp_path / "u", tmp_path / "w"
        assert main(["fit", "--panel", str(ppath), "--out", str(out_u)]) == EXIT_OK
        assert main(
            ["fit", "--panel", str(ppath), "--weighted", "--out", str(out_w)]
        ) == EXIT_OK
        (ru,) = json.loads((out_u / "fits.json").read_text())
        (rw,) = json.loads((out_w / "fits.json").read_text())
        assert np.abs(np.array(ru["theta"]) - np.array(rw["theta"])).max() < 1e-6
        assert "kappa" in rw and "kappa" not in ru

    def test_json_round_trips_fit_fields(self, tmp_path):
        ppath, panel = make_panel_file(tmp_path, seed=4)
        out = tmp_path / "out"
        assert main(["fit", "--panel", str(ppath), "--out", str(out)]) == EXIT_OK
        records = json.loads((out / "fits.json").read_text())
        ingested = ingest_csv(ppath)
        for rec in records:
            g = ingested.gene_ids.index(rec["gene"])
            single = fit(ingested.times, ingested.expr[g], None, 1)
            assert np.array_equal(np.array(rec["theta"]), single.theta)
            assert rec["sigma2"] == single.sigma2


class TestScreenCommand:
    def test_constant_gene_flagged_with_p_one(self, tmp_path):
        ppath, _ = make_panel_file(
            tmp_path, seed=5, extra_rows=[("G_CONST", lambda t: np.full(t.size, 3.0))]
        )
        out = tmp_path / "out"
        assert main(["screen", "--panel", str(ppath), "--out", str(out)]) == EXIT_OK
        rows = {r["gene"]: r for r in read_rows(out / "screen.csv")}
        const = rows["G_CONST"]
        assert float(const["wald_p"]) == 1.0
        assert float(const["f_p"]) == 1.0
        assert "zero_variance" in const["flags"]
        assert "undefined_f" in const["flags"]

    def test_both_mode_schema(self, tmp_path):
        ppath, _ = make_panel_file(tmp_path, seed=6)
        out = tmp_path / "out"
        assert main(
            ["screen", "--panel", str(ppath), "--mode", "both", "--out", str(out)]
        ) == EXIT_OK
        with open(out / "screen.csv", newline="") as fh:
            header = next(csv.reader(fh))
        assert header == [
            "gene",
            "unweighted_wald_stat",
            "unweighted_wald_p",
            "unweighted_f_stat",
            "unweighted_f_p",
            "unweighted_flags",
            "weighted_wald_stat",
            "weighted_wald_p",
            "weighted_f_stat",
            "weighted_f_p",
            "weighted_flags",
        ]

    def test_matches_library_screening(self, tmp_path):
        ppath, _ = make_panel_file(tmp_path, seed=7)
        out = tmp_path / "out"
        assert main(
            ["screen", "--panel", str(ppath), "--mode", "both", "--out", str(out)]
        ) == EXIT_OK
        panel = ingest_csv(ppath)
        unw = screen_panel(panel, None, 1)
        search = select_kappa(panel.times, 1, loo_folds(panel.n_samples))
        w = compute_weights(panel.times, CircularKde(panel.times, search.kappa_opt))
        wtd = screen_panel(panel, w, 1)
        rows = read_rows(out / "screen.csv")
        for row, ru, rw in zip(rows, unw, wtd):
            assert float(row["unweighted_wald_stat"]) == ru.wald_stat
            assert float(row["unweighted_f_stat"]) == ru.f_stat
            assert float(row["weighted_wald_stat"]) == rw.wald_stat
            assert float(row["weighted_f_stat"]) == rw.f_stat

    def test_counts_split_over_modes(self, tmp_path):
        ppath, _ = make_panel_file(tmp_path, seed=8)
        out = tmp_path / "out"
        assert main(
            ["screen", "--panel", str(ppath), "--mode", "both", "--out", str(out)]
        ) == EXIT_OK
        rows = read_rows(out / "screen.csv")
        greater = sum(
            float(r["weighted_wald_stat"]) > float(r["unweighted_wald_stat"])
            for r in rows
        )
        not_greater = sum(
            float(r["weighted_wald_stat"]) <= float(r["unweighted_wald_stat"])
            for r in rows
        )
        assert greater + not_greater == len(rows)


class TestCompareCommand:
    def write_table(self, tmp_path, u, w):
        path = tmp_path / "table.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["gene", "unweighted_wald_stat", "weighted_wald_stat",
                 "unweighted_f_stat", "weighted_f_stat"]
            )
            for i, (a, b) in enumerate(zip(u, w)):
                writer.writerow([f"g{i}", a, b, a, b])
        return path

    def test_identical_statistics_give_unit_slope(self, tmp_path):
        u = np.linspace(1.0, 5.0, 8)
        table = self.write_table(tmp_path, u, u)
        out = tmp_path / "out"
        assert main(
            ["compare", "--table", str(table), "--statistic", "wald", "--out", str(out)]
        ) == EXIT_OK
        result = json.loads((out / "comparison.json").read_text())
        assert result["beta"] == pytest.approx(1.0, abs=1e-12)
        assert result["n_weighted_greater"] == 0
        assert result["n_weighted_not_greater"] == 8

    def test_proportional_statistics_recover_the_factor(self, tmp_path):
        u = np.linspace(1.0, 5.0, 6)
        table = self.write_table(tmp_path, u, 1.1 * u)
        out = tmp_path / "out"
        assert main(
            ["compare", "--table", str(table), "--statistic", "f", "--out", str(out)]
        ) == EXIT_OK
        result = json.loads((out / "comparison.json").read_text())
        assert result["beta"] == pytest.approx(1.1, abs=1e-12)
        assert result["n_weighted_greater"] == 6

    def test_mixed_data_matches_closed_form(self, tmp_path):
        rng = np.random.default_rng(9)
        u = rng.uniform(0.5, 10.0, 100)
        w = u * rng.uniform(0.8, 1.4, 100)
        table = self.write_table(tmp_path, u, w)
        out = tmp_path / "out"
        assert main(
            ["compare", "--table", str(table), "--statistic", "wald", "--out", str(out)]
        ) == EXIT_OK
        result = json.loads((out / "comparison.json").read_text())
        beta_oracle = float(np.sum(u * w) / np.sum(u * u))
        assert result["beta"] == pytest.approx(beta_oracle, rel=1e-12)
        assert result["n_weighted_greater"] == int(np.sum(w > u))

    def test_all_zero_covariate_is_a_numeric_error(self, tmp_path):
        table = self.write_table(tmp_path, [0.0, 0.0], [1.0, 2.0])
        out = tmp_path / "out"
        code = main(
            ["compare", "--table", str(table), "--statistic", "wald", "--out", str(out)]
        )
        assert code == EXIT_NUMERIC
        with pytest.raises(UndefinedSlopeError):
            compare_statistics([0.0, 0.0], [1.0, 2.0])

    def test_scatter_svg_structure(self, tmp_path):
        u = np.linspace(1.0, 5.0, 5)
        table = self.write_table(tmp_path, u, 1.2 * u)
        out = tmp_path / "out"
        assert main(
            ["compare", "--table", str(table), "--statistic", "wald", "--out", str(out)]
        ) == EXIT_OK
        ids = svg_series_ids(out / "comparison.svg")
        assert {"series-genes", "series-identity", "series-fit"} <= ids


class TestSimulateCommand:
    def simulate_args(self, out, trials="2", phases="3"):
        return [
            "simulate", "--setting", "1", "--trials", trials,
            "--phase-points", phases, "--n-times", "12", "--seed", "11",
            "--out", out,
        ]

    def test_outputs_and_cov_keys(self, tmp_path):
        out = tmp_path / "out"
        assert main(self.simulate_args(str(out))) == EXIT_OK
        cov = json.loads((out / "cov.json").read_text())["cov"]
        assert set(cov) == {
            f"{arm}.{stat}"
            for arm in ("unweighted", "equispaced", "weighted")
            for stat in ("wald", "f")
        }
        rows = read_rows(out / "sweep.csv")
        assert len(rows) == 3 * 3  # phases x arms
        ids = svg_series_ids(out / "sweep.svg")
        assert {"series-unweighted", "series-equispaced", "series-weighted"} <= ids

    def test_byte_identical_reruns(self, tmp_path):
        run_twice_and_compare(
            tmp_path,
            lambda out: self.simulate_args(out),
            ["sweep.csv", "cov.json", "sweep.svg", "metadata.json"],
        )

    def test_equispaced_everywhere_curves_coincide(self, tmp_path):
        out = tmp_path / "out"
        args = [
            "simulate", "--setting", "1", "--trials", "150",
            "--phase-points", "3", "--n-times", "24", "--seed", "12",
            "--time-source", "equispaced", "--out", str(out),
        ]
        assert main(args) == EXIT_OK
        rows = read_rows(out / "sweep.csv")
        by_arm = {}
        for r in rows:
            by_arm.setdefault(r["arm"], []).append(float(r["mean_wald_over_n"]))
        mu = np.array(by_arm["unweighted"])
        me = np.array(by_arm["equispaced"])
        mw = np.array(by_arm["weighted"])
        assert np.abs(mu - mw).max() < 1e-8
        assert np.abs(mu - me).max() < 0.06


class TestConfigAndExitCodes:
    def test_config_file_supplies_defaults_and_flags_override(self, tmp_path):
        ppath, _ = make_panel_file(tmp_path, seed=13)
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("# comment\norder=2\nf_mode=classical\n")
        out1 = tmp_path / "o1"
        assert main(
            ["screen", "--panel", str(ppath), "--config", str(cfg), "--out", str(out1)]
        ) == EXIT_OK
        meta = json.loads((out1 / "metadata.json").read_text())
        assert meta["options"]["order"] == 2
        assert meta["options"]["f_mode"] == "classical"
        out2 = tmp_path / "o2"
        assert main(
            ["screen", "--panel", str(ppath), "--config", str(cfg),
             "--order", "1", "--out", str(out2)]
        ) == EXIT_OK
        meta = json.loads((out2 / "metadata.json").read_text())
        assert meta["options"]["order"] == 1
        assert meta["options"]["f_mode"] == "classical"

    def test_unknown_config_key_is_a_config_error(self, tmp_path):
        ppath, _ = make_panel_file(tmp_path, seed=14)
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("bandwidth=3\n")
        code = main(
            ["screen", "--panel", str(ppath), "--config", str(cfg),
             "--out", str(tmp_path / "o")]
        )
        assert code == EXIT_CONFIG

    def test_missing_panel_is_an_ingestion_error(self, tmp_path):
        code = main(
            ["screen", "--panel", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]
        )
        assert code == EXIT_INGESTION

    def test_bad_order_is_a_config_error(self, tmp_path):
        ppath, _ = make_panel_file(tmp_path, seed=15)
        code = main(
            ["screen", "--panel", str(ppath), "--order", "0", "--out", str(tmp_path / "o")]
        )
        assert code == EXIT_CONFIG

    def test_degenerate_design_is_a_numeric_error(self, tmp_path):
        # every sample at the same instant: the design cannot be fit
        t = np.full(10, 5.0)
        panel = TimeSeriesPanel(
            times=t, gene_ids=["G"], expr=np.arange(10.0)[None, :]
        )
        ppath = tmp_path / "p.csv"
        write_panel(panel, ppath)
        code = main(["screen", "--panel", str(ppath), "--out", str(tmp_path / "o")])
        assert code == EXIT_NUMERIC

    def test_genes_layout_flag(self, tmp_path):
        ppath, panel = make_panel_file(tmp_path, seed=16)
        gpath = tmp_path / "genes.csv"
        write_panel(ingest_csv(ppath), gpath, layout="genes")
        out = tmp_path / "out"
        assert main(
            ["screen", "--panel", str(gpath), "--rows", "genes", "--out", str(out)]
        ) == EXIT_OK
        assert (out / "screen.csv").exists()
