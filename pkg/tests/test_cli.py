import hashlib
import json
import math

import numpy as np
import pytest

from qpmpairs.cli import main
from qpmpairs.entanglement import (
    coincidence_probability,
    chsh_setting_groups,
    ideal_post_selected_state,
)
from qpmpairs.formats import (
    packaged_data_path,
    read_count_records_csv,
    read_curve_csv,
    write_count_records_csv,
)
from qpmpairs.entanglement import CountRecord


@pytest.fixture(autouse=True)
def run_in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_crystal_file(tmp_path, **overrides):
    doc = json.loads(packaged_data_path("ppktp_type2_telecom.json").read_text())
    doc["sellmeier"] = {
        axis: json.loads(packaged_data_path(ref).read_text())
        for axis, ref in doc["sellmeier"].items()
    }
    doc.update(overrides)
    path = tmp_path / "crystal.json"
    path.write_text(json.dumps(doc))
    return path


class TestPmCurveCommand:
    def test_default_produces_61_rows(self, tmp_path, capsys):
        assert main(["pm-curve", "--out", "pm.csv"]) == 0
        curve = read_curve_csv(tmp_path / "pm.csv")
        assert len(curve.abscissa) == 61
        i = int(np.argmin(curve.ordinate))
        assert curve.abscissa[i] == pytest.approx(1581.0, abs=1.0)
        out = capsys.readouterr().out
        assert "turning point" in out

    def test_provenance_header_written(self, tmp_path):
        main(["pm-curve", "--out", "pm.csv"])
        head = (tmp_path / "pm.csv").read_text().splitlines()[:5]
        assert any("tool: qpmpairs" in line for line in head)
        assert any("config_sha256" in line for line in head)

    def test_inverted_range_fails_validation_before_compute(self, capsys):
        code = main(["pm-curve", "--start", "1600", "--stop", "1540", "--out", "pm.csv"])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_malformed_crystal_names_offending_key(self, tmp_path, capsys):
        doc = json.loads(packaged_data_path("ppktp_type2_telecom.json").read_text())
        del doc["length_mm"]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        code = main(["pm-curve", "--crystal", str(bad), "--out", "pm.csv"])
        assert code == 1
        assert "length_mm" in capsys.readouterr().err

    def test_missing_crystal_file_is_io_error(self):
        assert main(["pm-curve", "--crystal", "nope.json", "--out", "pm.csv"]) == 3

    def test_input_files_not_mutated(self, tmp_path):
        crystal = write_crystal_file(tmp_path)
        before = hashlib.sha256(crystal.read_bytes()).hexdigest()
        assert main(["pm-curve", "--crystal", str(crystal), "--out", "pm.csv"]) == 0
        assert hashlib.sha256(crystal.read_bytes()).hexdigest() == before


class TestShgSweepCommand:
    def test_default_sweep_writes_four_curves(self, tmp_path, capsys):
        assert main(["shg-sweep", "--out", "shg"]) == 0
        files = sorted(tmp_path.glob("shg_*nm.csv"))
        assert [f.name for f in files] == [
            "shg_1545nm.csv",
            "shg_1550nm.csv",
            "shg_1555nm.csv",
            "shg_1560nm.csv",
        ]
        for f in files:
            curve = read_curve_csv(f)
            assert curve.ordinate.max() == pytest.approx(1.0, abs=1e-4)
        out = capsys.readouterr().out
        assert out.count("peak 1.0000") == 4
        assert "FWHM" in out

    def test_out_of_validity_range_surfaced(self, capsys):
        code = main(
            ["shg-sweep", "--fundamental", "1550", "--t-start", "-200", "--t-stop", "70"]
        )
        assert code == 1
        assert "outside validity" in capsys.readouterr().err


class TestEpmFindCommand:
    def test_default_report(self, tmp_path):
        assert main(["epm-find", "--out", "epm.json"]) == 0
        doc = json.loads((tmp_path / "epm.json").read_text())
        assert doc["pump_wavelength_nm"] == pytest.approx(790.71, abs=0.05)
        assert abs(doc["mismatch_rad_per_um"]) < 1e-6
        assert abs(doc["group_index_mismatch"]) < 1e-6

    def test_broken_crystal_solver_exit(self, tmp_path, capsys):
        crystal = write_crystal_file(tmp_path, poling_period_um=10.0)
        code = main(["epm-find", "--crystal", str(crystal), "--out", "epm.json"])
        assert code == 2
        assert "NoSolutionError" in capsys.readouterr().err


class TestBellSimCommand:
    def test_seed_reproducibility_bitwise(self, tmp_path):
        assert main(["bell-sim", "--seed", "7", "--out", "a"]) == 0
        assert main(["bell-sim", "--seed", "7", "--out", "b"]) == 0
        assert (tmp_path / "a.records.csv").read_bytes() == (
            tmp_path / "b.records.csv"
        ).read_bytes()
        assert main(["bell-sim", "--seed", "8", "--out", "c"]) == 0
        assert (tmp_path / "a.records.csv").read_bytes() != (
            tmp_path / "c.records.csv"
        ).read_bytes()

    def test_ideal_state_run_violates_chsh(self, tmp_path):
        assert main(
            ["bell-sim", "--coherence", "1.0", "--seed", "11", "--out", "ideal"]
        ) == 0
        doc = json.loads((tmp_path / "ideal.analysis.json").read_text())
        assert doc["raw"]["S"] > 2.5
        assert doc["raw"]["significance"] > 5.0

    def test_power_sweep_column_strictly_decreasing(self, tmp_path):
        assert main(
            ["bell-sim", "--seed", "1", "--out", "sweep", "--power-sweep", "50,100,200,400"]
        ) == 0
        doc = json.loads((tmp_path / "sweep.analysis.json").read_text())
        rect = [row["rect_max_min_ratio"] for row in doc["power_sweep"]]
        assert all(a > b for a, b in zip(rect, rect[1:]))

    def test_config_file_with_flag_override(self, tmp_path):
        (tmp_path / "config.json").write_text(
            json.dumps({"bell_sim": {"seed": 5, "duration_s": 100.0, "coherence": 0.9}})
        )
        assert main(["bell-sim", "--config", "config.json", "--out", "cfg"]) == 0
        records = read_count_records_csv(tmp_path / "cfg.records.csv")
        assert records[0].duration_s == 100.0
        # flag overrides the config value
        assert main(
            ["bell-sim", "--config", "config.json", "--duration", "50", "--out", "cfg2"]
        ) == 0
        records2 = read_count_records_csv(tmp_path / "cfg2.records.csv")
        assert records2[0].duration_s == 50.0

    def test_bad_coherence_validation_exit(self, capsys):
        assert main(["bell-sim", "--coherence", "2.0", "--out", "x"]) == 1


class TestChshAnalyzeCommand:
    def write_noiseless_csv(self, tmp_path, scale=4000.0):
        state = ideal_post_selected_state()
        records = [
            CountRecord(
                setting=s,
                coincidences=scale * coincidence_probability(state, s),
                singles1_hz=0.0,
                singles2_hz=0.0,
                duration_s=200.0,
            )
            for group in chsh_setting_groups()
            for s in group
        ]
        path = tmp_path / "ideal.csv"
        write_count_records_csv(records, path)
        return path

    def test_noiseless_ideal_reaches_tsirelson(self, tmp_path):
        path = self.write_noiseless_csv(tmp_path)
        assert main(["chsh-analyze", str(path), "--out", "s.json"]) == 0
        doc = json.loads((tmp_path / "s.json").read_text())
        assert doc["raw"]["S"] == pytest.approx(2 * math.sqrt(2), abs=1e-6)

    def test_all_equal_counts_give_zero_s(self, tmp_path):
        records = [
            CountRecord(s, 100.0, 0.0, 0.0, 200.0)
            for group in chsh_setting_groups()
            for s in group
        ]
        path = tmp_path / "flat.csv"
        write_count_records_csv(records, path)
        assert main(["chsh-analyze", str(path), "--out", "flat.json"]) == 0
        doc = json.loads((tmp_path / "flat.json").read_text())
        assert doc["raw"]["S"] == pytest.approx(0.0, abs=1e-12)
        assert doc["raw"]["significance"] < 0

    def test_missing_setting_listed(self, tmp_path, capsys):
        path = self.write_noiseless_csv(tmp_path)
        records = read_count_records_csv(path)[:-1]
        short = tmp_path / "short.csv"
        write_count_records_csv(records, short)
        code = main(["chsh-analyze", str(short), "--out", "x.json"])
        assert code == 1
        assert "(112.5, 0)" in capsys.readouterr().err

    def test_roundtrip_with_bell_sim_output(self, tmp_path):
        assert main(["bell-sim", "--seed", "3", "--out", "run"]) == 0
        assert main(
            ["chsh-analyze", str(tmp_path / "run.records.csv"), "--out", "re.json"]
        ) == 0
        sim = json.loads((tmp_path / "run.analysis.json").read_text())
        re_doc = json.loads((tmp_path / "re.json").read_text())
        assert re_doc["raw"]["S"] == pytest.approx(sim["raw"]["S"], abs=1e-12)

    def test_missing_csv_is_io_error(self):
        assert main(["chsh-analyze", "absent.csv", "--out", "x.json"]) == 3


class TestRateEstimateCommand:
    def test_report_contents(self, tmp_path, capsys):
        assert main(
            [
                "rate-estimate",
                "--detected-hz",
                "20.0",
                "--target-brightness",
                "1.63e4",
                "--bandwidth",
                "2.0",
                "--out",
                "rate.json",
            ]
        ) == 0
        doc = json.loads((tmp_path / "rate.json").read_text())
        assert doc["collection_chain"]["total_db"] == pytest.approx(6.55)
        assert doc["collection_chain"]["transmission"] == pytest.approx(0.2213, abs=5e-4)
        assert len(doc["variants"]) == 32
        out = capsys.readouterr().out
        assert "6.55 dB" in out

    def test_forward_inverse_roundtrip_through_cli(self, tmp_path):
        # Predict the detected rate for a known brightness, feed it back in,
        # and recover the brightness with the same accounting flags.
        from qpmpairs.budget import AccountingConfig, LossChain, implied_detected_rate
        from qpmpairs.entanglement import DetectorModel

        chain1 = LossChain.from_db_values([1.6, 4.95, 0.31])
        chain2 = LossChain.from_db_values([1.6, 4.95, 0.66])
        detected = implied_detected_rate(
            1.63e4, 205.0, 2.0, chain1, chain2, DetectorModel(), DetectorModel(),
            AccountingConfig(),
        )
        assert main(
            [
                "rate-estimate",
                "--detected-hz",
                str(detected),
                "--bandwidth",
                "2.0",
                "--out",
                "rt.json",
            ]
        ) == 0
        doc = json.loads((tmp_path / "rt.json").read_text())
        assert doc["estimate"]["rate_per_s_mw_nm"] == pytest.approx(1.63e4, rel=1e-9)


class TestVersionFlag:
    def test_version_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "qpmpairs" in capsys.readouterr().out
