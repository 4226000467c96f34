import csv
import io
import json

import numpy as np
import pytest

from buffernet.cli import main
from buffernet.instances import save_instance


@pytest.fixture
def tiny2_file(tiny2, tmp_path):
    path = str(tmp_path / "tiny2.json")
    save_instance(tiny2, path)
    return path


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_json(tmp_path, name, payload):
    path = str(tmp_path / name)
    with open(path, "w") as fh:
        json.dump(payload, fh)
    return path


class TestValidate:
    def test_valid_instance_exit_0(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "validate", tiny2_file)
        assert code == 0
        doc = json.loads(out)
        assert doc["structurally_valid"] is True
        assert doc["r_positive"] is True

    def test_structural_failure_exit_2(self, capsys, tmp_path, tiny2):
        bad = write_json(tmp_path, "bad.json", {
            "version": 1, "names": ["a", "b"],
            "liabilities": [[0.0, -1.0], [0.0, 0.0]],
            "portfolio": [[1.0], [1.0]], "external": [1.0, 1.0],
            "costs": [1.0, 1.0]})
        code, out, _ = run(capsys, "validate", bad)
        assert code == 2
        doc = json.loads(out)
        assert doc["structurally_valid"] is False
        assert doc["violations"]

    def test_missing_file_exit_1(self, capsys, tmp_path):
        code, _, err = run(capsys, "validate", str(tmp_path / "nope.json"))
        assert code == 1
        assert "error" in err


class TestClearing:
    def test_shock_chain(self, capsys, tiny2_file, tmp_path):
        shock = write_json(tmp_path, "shock.json", [-0.9, 0.0])
        code, out, _ = run(capsys, "clearing", tiny2_file, "--shock", shock)
        assert code == 0
        doc = json.loads(out)
        assert doc["systemic_loss"] == pytest.approx(0.4)
        assert doc["default_set"] == [0]

    def test_no_shock_no_loss(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "clearing", tiny2_file)
        assert code == 0
        assert json.loads(out)["systemic_loss"] == pytest.approx(0.0)

    def test_infeasible_is_a_result_not_an_error(self, capsys, tiny2_file, tmp_path):
        shock = write_json(tmp_path, "shock.json", [-1.7, 0.3])
        code, out, _ = run(capsys, "clearing", tiny2_file, "--shock", shock)
        assert code == 0
        doc = json.loads(out)
        assert doc["feasible"] is False
        assert doc["systemic_loss"] == "inf"

    def test_buffer_adds_to_inflow(self, capsys, tiny2_file, tmp_path):
        shock = write_json(tmp_path, "shock.json", [-0.9, 0.0])
        buffer = write_json(tmp_path, "buf.json", {"buffer": [0.4, 0.0]})
        code, out, _ = run(capsys, "clearing", tiny2_file,
                           "--shock", shock, "--buffer", buffer)
        assert code == 0
        assert json.loads(out)["systemic_loss"] == pytest.approx(0.0)

    def test_wrong_length_vector(self, capsys, tiny2_file, tmp_path):
        shock = write_json(tmp_path, "shock.json", [1.0])
        code, _, err = run(capsys, "clearing", tiny2_file, "--shock", shock)
        assert code == 1
        assert "expected 2 entries" in err


class TestMargin:
    def test_default_margin(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "margin", tiny2_file, "--norm", "linf")
        assert code == 0
        assert json.loads(out)["margin"] == pytest.approx(0.5)

    def test_insolvency_margin(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "margin", tiny2_file, "--norm", "linf",
                           "--insolvency")
        assert json.loads(out)["margin"] == pytest.approx(17 / 30, abs=1e-9)

    def test_zero_portfolio_reports_inf(self, capsys, tmp_path):
        inst = write_json(tmp_path, "z.json", {
            "version": 1, "names": ["a", "b"],
            "liabilities": [[0.0, 1.0], [0.0, 0.0]],
            "portfolio": [[0.0], [0.0]], "external": [1.5, 0.2],
            "costs": [1.0, 1.0]})
        code, out, _ = run(capsys, "margin", inst, "--norm", "linf")
        assert code == 0
        assert json.loads(out)["margin"] == "inf"


class TestDesign:
    def test_loss_small_budget(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "design", "loss", tiny2_file, "--norm", "linf",
                           "--radius", "0.55", "--budget", "0.02")
        assert code == 0
        doc = json.loads(out)
        assert doc["objective"] == pytest.approx(0.03)
        assert doc["status"] == "optimal"

    def test_loss_certificate_budget(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "design", "loss", tiny2_file, "--norm", "linf",
                           "--radius", "0.55", "--budget", "0.05")
        assert json.loads(out)["objective"] == pytest.approx(0.0)

    def test_margin_zero_budget(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "design", "margin", tiny2_file, "--norm", "linf",
                           "--budget", "0")
        assert json.loads(out)["objective"] == pytest.approx(0.5)

    def test_loss_requires_radius(self, capsys, tiny2_file):
        code, _, err = run(capsys, "design", "loss", tiny2_file, "--norm", "linf",
                           "--budget", "1")
        assert code == 2
        assert "radius" in err

    def test_infeasible_design_exit_0(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "design", "loss", tiny2_file, "--norm", "linf",
                           "--radius", "2.0", "--budget", "0")
        assert code == 0
        doc = json.loads(out)
        assert doc["status"] == "infeasible"
        assert doc["objective"] == "inf"


class TestCertificate:
    def test_tiny2(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "certificate", tiny2_file, "--norm", "linf",
                           "--radius", "0.55")
        assert code == 0
        doc = json.loads(out)
        assert doc["budget"] == pytest.approx(0.05)
        assert doc["buffer"] == pytest.approx([0.05, 0.0])

    def test_below_nominal_margin(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "certificate", tiny2_file, "--norm", "linf",
                           "--radius", "0.3")
        assert json.loads(out)["budget"] == 0.0


class TestSweep:
    def test_opt_loss_column(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "sweep", tiny2_file, "--norm", "linf",
                           "--budgets", "0,0.02,0.05", "--radius", "0.55",
                           "--policies", "opt")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [float(r["value"]) for r in rows] == pytest.approx([0.05, 0.03, 0.0])
        assert rows[0]["policy"] == "opt_loss"
        assert {r["metric"] for r in rows} == {"loss"}

    def test_budget_range_syntax(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "sweep", tiny2_file, "--norm", "linf",
                           "--budgets", "0:1.3:0.65", "--policies", "opt")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [float(r["budget"]) for r in rows] == pytest.approx([0, 0.65, 1.3])
        assert float(rows[-1]["value"]) == pytest.approx(1.0)

    def test_default_policies_mirror_table_layout(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "sweep", tiny2_file, "--norm", "linf",
                           "--budgets", "0", "--radius", "0.55")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [r["policy"] for r in rows] == [
            "opt_loss", "margin_then_loss", "uniform", "exposure_proportional"]

    def test_infinite_cells_do_not_abort(self, capsys, tiny2_file):
        code, out, _ = run(capsys, "sweep", tiny2_file, "--norm", "linf",
                           "--budgets", "0,0.05", "--radius", "0.8",
                           "--policies", "opt,uniform")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 4
        assert {r["value"] for r in rows} == {"inf"}

    def test_margin_policy_requires_radius(self, capsys, tiny2_file):
        code, _, err = run(capsys, "sweep", tiny2_file, "--norm", "linf",
                           "--budgets", "0", "--policies", "margin")
        assert code == 2
        assert "radius" in err

    def test_thread_cap_does_not_change_output(self, capsys, tiny2_file,
                                               monkeypatch):
        monkeypatch.setenv("BUFFERNET_THREADS", "1")
        _, serial, _ = run(capsys, "sweep", tiny2_file, "--norm", "linf",
                           "--budgets", "0,0.02,0.05", "--radius", "0.55")
        monkeypatch.setenv("BUFFERNET_THREADS", "3")
        _, threaded, _ = run(capsys, "sweep", tiny2_file, "--norm", "linf",
                             "--budgets", "0,0.02,0.05", "--radius", "0.55")
        assert serial == threaded


class TestFormats:
    def test_json_and_csv_carry_identical_values(self, capsys, tiny2_file):
        _, jout, _ = run(capsys, "margin", tiny2_file, "--norm", "linf",
                         "--format", "json")
        _, cout, _ = run(capsys, "margin", tiny2_file, "--norm", "linf",
                         "--format", "csv")
        doc = json.loads(jout)
        flat = dict(line.split(",", 1) for line in cout.strip().splitlines()[1:])
        assert flat["norm"] == doc["norm"]
        assert float(flat["margin"]) == doc["margin"]

    def test_sweep_cross_format_equality(self, capsys, tiny2_file):
        _, cout, _ = run(capsys, "sweep", tiny2_file, "--norm", "linf",
                         "--budgets", "0,0.05", "--radius", "0.55",
                         "--policies", "opt,uniform", "--format", "csv")
        _, jout, _ = run(capsys, "sweep", tiny2_file, "--norm", "linf",
                         "--budgets", "0,0.05", "--radius", "0.55",
                         "--policies", "opt,uniform", "--format", "json")
        crows = list(csv.DictReader(io.StringIO(cout)))
        jrows = json.loads(jout)["rows"]
        assert len(crows) == len(jrows)
        for cr, jr in zip(crows, jrows):
            assert float(cr["budget"]) == jr["budget"]
            assert cr["policy"] == jr["policy"]
            assert float(cr["value"]) == pytest.approx(jr["value"], abs=1e-12)
            assert [float(cr[f"b_{i+1}"]) for i in range(2)] == \
                pytest.approx(jr["buffer"], abs=1e-12)

    def test_vector_results_flatten_to_indexed_rows(self, capsys, tiny2_file,
                                                    tmp_path):
        shock = write_json(tmp_path, "shock.json", [-0.9, 0.0])
        _, jout, _ = run(capsys, "clearing", tiny2_file, "--shock", shock,
                         "--format", "json")
        _, cout, _ = run(capsys, "clearing", tiny2_file, "--shock", shock,
                         "--format", "csv")
        doc = json.loads(jout)
        flat = dict(line.split(",", 1) for line in cout.strip().splitlines()[1:])
        assert [float(flat[f"clearing_vector_{i+1}"]) for i in range(2)] == \
            pytest.approx(doc["clearing_vector"])
        assert flat["feasible"] == "true"

    def test_twelve_significant_digits(self, capsys, tiny2_file):
        _, out, _ = run(capsys, "margin", tiny2_file, "--norm", "linf",
                        "--insolvency")
        assert '"margin": 0.566666666667' in out

    def test_out_written_atomically(self, capsys, tiny2_file, tmp_path):
        target = tmp_path / "report.json"
        code, out, _ = run(capsys, "margin", tiny2_file, "--norm", "linf",
                           "--out", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["margin"] == 0.5
        leftovers = [p for p in tmp_path.iterdir() if p.name.startswith(".buffernet-")]
        assert not leftovers

    def test_stable_across_runs(self, capsys, tiny2_file):
        _, a, _ = run(capsys, "sweep", tiny2_file, "--norm", "linf",
                      "--budgets", "0,0.05", "--radius", "0.55")
        _, b, _ = run(capsys, "sweep", tiny2_file, "--norm", "linf",
                      "--budgets", "0,0.05", "--radius", "0.55")
        assert a == b


class TestGenerate:
    def test_deterministic_files(self, capsys, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        code1, _, _ = run(capsys, "generate", "cp", "--n", "25", "--core", "4",
                          "--assets", "2", "--seed", "11", "--out", a)
        code2, _, _ = run(capsys, "generate", "cp", "--n", "25", "--core", "4",
                          "--assets", "2", "--seed", "11", "--out", b)
        assert code1 == code2 == 0
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_config_file_with_flag_override(self, capsys, tmp_path):
        cfg = write_json(tmp_path, "cfg.json",
                         {"n": 20, "core_size": 3, "m": 2, "seed": 4})
        out_path = str(tmp_path / "g.json")
        code, out, _ = run(capsys, "generate", "cp", "--config", cfg,
                           "--seed", "5", "--out", out_path)
        assert code == 0
        assert json.loads(out)["seed"] == 5

    def test_bad_params_exit_2(self, capsys, tmp_path):
        code, _, err = run(capsys, "generate", "cp", "--n", "5", "--core", "9",
                           "--out", str(tmp_path / "x.json"))
        assert code == 2


class TestCalibrate:
    def _write_inputs(self, tmp_path, rows, cols):
        m = tmp_path / "marg.csv"
        names = [f"bank{i}" for i in range(len(rows))]
        m.write_text("name,interbank_assets,interbank_liabilities,equity\n" + "\n".join(
            f"{names[i]},{rows[i]},{cols[i]},1.0" for i in range(len(rows))) + "\n")
        h = tmp_path / "hold.csv"
        h.write_text("name,holding_1,holding_2\n" + "\n".join(
            f"{n},1.0,0.5" for n in names) + "\n")
        e = tmp_path / "ext.csv"
        e.write_text("name,external\n" + "\n".join(f"{n},9.0" for n in names) + "\n")
        c = tmp_path / "costs.csv"
        c.write_text("name,cost\n" + "\n".join(f"{n},1.0" for n in names) + "\n")
        return str(m), str(h), str(e), str(c)

    def test_toy_calibration(self, capsys, tmp_path):
        m, h, e, c = self._write_inputs(tmp_path, [3, 2, 1], [2, 2, 2])
        out_path = str(tmp_path / "inst.json")
        code, out, _ = run(capsys, "calibrate", "--marginals", m, "--holdings", h,
                           "--externals", e, "--costs", c, "--out", out_path)
        assert code == 0
        from buffernet.instances import load_instance
        from buffernet.network import derive
        inst = load_instance(out_path)
        assert derive(inst).relative_liabilities.sum(1) == pytest.approx([1, 1, 1])

    def test_infeasible_support_exit_2(self, capsys, tmp_path):
        m, h, e, c = self._write_inputs(tmp_path, [1, 1], [2, 0])
        code, _, err = run(capsys, "calibrate", "--marginals", m, "--holdings", h,
                           "--externals", e, "--costs", c,
                           "--out", str(tmp_path / "x.json"))
        assert code == 2
        assert "IPF" in err or "support" in err
