import argparse
import csv
import json
import unittest
from contextlib import redirect_stderr
from io import StringIO
from pathlib import Path
from tempfile import TemporaryDirectory
from unittest.mock import patch

import config
from database import CheckpointStore
from errors import SpectrumError
from main import default_sectors, main, parse_grid, run_key
from reporter import CheckResult


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def quiet_main(argv):
    with redirect_stderr(StringIO()):
        return main(argv)


class TestArguments(unittest.TestCase):
    def test_parse_grid(self):
        self.assertEqual(parse_grid("-2:2:5"), [-2.0, -1.0, 0.0, 1.0, 2.0])
        self.assertEqual(parse_grid("0.5, 1,2"), [0.5, 1.0, 2.0])
        geo = parse_grid("0.01:1:3", geometric=True)
        self.assertAlmostEqual(geo[1], 0.1)
        for bad in ("1:2", "1:2:1", "a,b", "", "0:1:3x"):
            with self.assertRaises(argparse.ArgumentTypeError):
                parse_grid(bad)
        with self.assertRaises(argparse.ArgumentTypeError):
            parse_grid("0:1:3", geometric=True)

    def test_default_sectors_are_even(self):
        self.assertEqual(default_sectors(500), [0, 124, 250, 374])
        self.assertTrue(all(n % 2 == 0 for n in default_sectors(37)))

    def test_run_key_depends_on_parameters(self):
        self.assertEqual(run_key("ramp", {"n": [10], "Q": [1.0]}), run_key("ramp", {"Q": [1.0], "n": [10]}))
        self.assertNotEqual(run_key("ramp", {"n": [10]}), run_key("ramp", {"n": [12]}))


class TestGroundscan(unittest.TestCase):
    def test_scan_writes_qfi_table_and_manifest(self):
        with TemporaryDirectory() as tmpdir:
            code = main(["groundscan", "--n", "10", "--q-grid", "-2:2:5", "--out", tmpdir])
            rows = read_rows(Path(tmpdir) / "groundscan_N10.csv")
            manifest = json.loads((Path(tmpdir) / "groundscan_manifest.json").read_text(encoding="utf-8"))

        self.assertEqual(code, 0)
        self.assertEqual(len(rows), 5)
        cba_row = rows[2]
        self.assertEqual(float(cba_row["q"]), 0.0)
        self.assertAlmostEqual(float(cba_row["fq_n_lambda_plus"]), 5.5, places=9)
        self.assertIn("Sx", cba_row["dominant_pair"])
        self.assertIn("lambda_plus", cba_row["above_sql"])
        self.assertEqual(manifest["status"], "complete")
        self.assertEqual(manifest["command"], "groundscan")
        self.assertTrue(manifest["run_key"])

    def test_resume_reproduces_the_same_file(self):
        with TemporaryDirectory() as tmpdir:
            argv = ["groundscan", "--n", "8", "--q-grid", "-1,0.3,1", "--out", tmpdir]
            self.assertEqual(main(argv), 0)
            first = (Path(tmpdir) / "groundscan_N8.csv").read_bytes()
            self.assertEqual(main(argv), 0)
            second = (Path(tmpdir) / "groundscan_N8.csv").read_bytes()
            manifest_path = str(Path(tmpdir) / "groundscan_manifest.json")
            self.assertEqual(main(["--manifest", manifest_path]), 0)
            third = (Path(tmpdir) / "groundscan_N8.csv").read_bytes()

        self.assertEqual(first, second)
        self.assertEqual(first, third)

    def test_invalid_input_exits_with_two(self):
        with TemporaryDirectory() as tmpdir:
            self.assertEqual(quiet_main(["groundscan", "--n", "1", "--out", tmpdir]), 2)
            self.assertEqual(quiet_main(["groundscan", "--n", "6", "--q-grid", "1,0", "--out", tmpdir]), 2)
            self.assertEqual(quiet_main(["groundscan", "--q-grid", "1:2", "--out", tmpdir]), 2)
            self.assertEqual(quiet_main([]), 2)
            self.assertEqual(quiet_main(["--manifest", str(Path(tmpdir) / "nope.json")]), 2)
            manifest = json.loads((Path(tmpdir) / "groundscan_manifest.json").read_text(encoding="utf-8"))

        self.assertEqual(manifest["status"], "invalid")

    def test_numerical_failure_exits_with_three(self):
        with TemporaryDirectory() as tmpdir:
            with patch("main.ground_state", side_effect=SpectrumError("eigensolver failed", N=6)):
                code = quiet_main(["groundscan", "--n", "6", "--q", "0.5", "--out", tmpdir])
            manifest = json.loads((Path(tmpdir) / "groundscan_manifest.json").read_text(encoding="utf-8"))

        self.assertEqual(code, 3)
        self.assertEqual(manifest["status"], "failed")

    def test_unexpected_worker_error_is_recorded(self):
        argv = ["groundscan", "--n", "6", "--q", "0.5"]
        with TemporaryDirectory() as tmpdir:
            with patch("main.ground_state", side_effect=KeyError("lost eigenvector")):
                code = quiet_main(argv + ["--out", tmpdir])
            manifest = json.loads((Path(tmpdir) / "groundscan_manifest.json").read_text(encoding="utf-8"))
            store = CheckpointStore(str(Path(tmpdir) / config.CHECKPOINT_NAME))
            failed = store.failed_points(manifest["run_key"])
            store.close()

            retry = quiet_main(argv + ["--out", tmpdir])
            store = CheckpointStore(str(Path(tmpdir) / config.CHECKPOINT_NAME))
            remaining = store.failed_points(manifest["run_key"])
            store.close()

        self.assertEqual(code, 3)
        self.assertEqual(manifest["status"], "failed")
        self.assertEqual(list(failed), [0])
        self.assertEqual(failed[0]["error_type"], "KeyError")
        self.assertEqual(retry, 0)
        self.assertEqual(remaining, {})


class TestDynamicsCommands(unittest.TestCase):
    def test_ramp(self):
        with TemporaryDirectory() as tmpdir:
            code = main(["ramp", "--n", "6", "--Q", "2", "--samples", "3", "--out", tmpdir])
            rows = read_rows(Path(tmpdir) / "ramp_N6_Q2.csv")
            summary = read_rows(Path(tmpdir) / "ramp_summary.csv")

        self.assertEqual(code, 0)
        self.assertEqual([float(r["t"]) for r in rows], [0.0, 1.5, 3.0])
        self.assertAlmostEqual(float(rows[0]["q"]), 1.5)
        self.assertEqual(float(rows[0]["conversion_efficiency"]), 0.0)
        self.assertEqual(summary[0]["target"], "cba")
        self.assertEqual(summary[0]["direction"], "Sx")

    def test_quench(self):
        with TemporaryDirectory() as tmpdir:
            code = main(["quench", "--n", "20", "--t-final", "1", "--samples", "3", "--out", tmpdir])
            rows = read_rows(Path(tmpdir) / "quench_N20.csv")
            manifest = json.loads((Path(tmpdir) / "quench_manifest.json").read_text(encoding="utf-8"))

        self.assertEqual(code, 0)
        self.assertEqual(len(rows), 3)
        self.assertAlmostEqual(float(rows[0]["fq_exact_over_n"]), 1.0, places=9)
        self.assertEqual(rows[0]["analytic_valid"], "true")
        self.assertIn("20", manifest["results"]["max_fq_over_n2"])

    def test_bad_propagator_settings(self):
        with TemporaryDirectory() as tmpdir:
            self.assertEqual(quiet_main(["ramp", "--n", "6", "--Q", "-1", "--out", tmpdir]), 2)
            self.assertEqual(quiet_main(["quench", "--n", "6", "--dt", "-0.1", "--out", tmpdir]), 2)
            self.assertEqual(quiet_main(["quench", "--n", "6", "--method", "euler", "--out", tmpdir]), 2)


class TestMeasurementCommands(unittest.TestCase):
    def test_noise_without_sigma_max(self):
        with TemporaryDirectory() as tmpdir:
            code = main(["noise", "tf", "--n", "8", "--sigma-grid", "0,1", "--theta-grid", "0.01:1.5:9",
                         "--no-sigma-max", "--out", tmpdir])
            rows = read_rows(Path(tmpdir) / "noise_tf_N8.csv")
            summary = read_rows(Path(tmpdir) / "noise_tf_summary.csv")

        self.assertEqual(code, 0)
        self.assertEqual(len(rows), 2)
        self.assertAlmostEqual(float(rows[0]["fisher_peak"]), 40.0, places=6)
        self.assertEqual(rows[0]["above_sql"], "true")
        self.assertLess(float(rows[1]["fisher_peak"]), 40.0)
        self.assertEqual(summary[0]["sigma_max"], "")

    def test_decompose(self):
        with TemporaryDirectory() as tmpdir:
            code = main(["decompose", "--n", "4", "--nh", "0", "1", "2", "--theta-points", "5",
                         "--phi-points", "9", "--out", tmpdir])
            rows = read_rows(Path(tmpdir) / "decompose_N4.csv")
            dist = read_rows(Path(tmpdir) / "decompose_N4_distribution.csv")
            husimi = read_rows(Path(tmpdir) / "husimi_N4_Nh0.csv")
            manifest = json.loads((Path(tmpdir) / "decompose_manifest.json").read_text(encoding="utf-8"))

        self.assertEqual(code, 0)
        self.assertEqual([r["n_h"] for r in rows], ["0", "1", "2"])
        self.assertEqual(float(rows[1]["probability"]), 0.0)
        self.assertEqual(rows[1]["husimi_file"], "")
        self.assertEqual(rows[0]["husimi_file"], "husimi_N4_Nh0.csv")
        self.assertEqual(len(dist), 5)
        self.assertAlmostEqual(sum(float(r["probability"]) for r in dist), 1.0, places=12)
        self.assertEqual(len(husimi), 5)
        identity = manifest["results"]["identity"]
        self.assertAlmostEqual(identity["qfi_sx"], identity["sector_sum"], places=9)

    def test_decompose_rejects_odd_twin_fock(self):
        with TemporaryDirectory() as tmpdir:
            self.assertEqual(quiet_main(["decompose", "--n", "5", "--state", "tf", "--out", tmpdir]), 2)
            self.assertEqual(quiet_main(["decompose", "--n", "4", "--nh", "9", "--out", tmpdir]), 2)


class TestVerifyCommand(unittest.TestCase):
    def test_report_and_exit_codes(self):
        passing = [CheckResult("exact qfi", 1.0, 1.0, True)]
        failing = passing + [CheckResult("gap exponent", -0.2, -1 / 3, False, "slope off")]
        with TemporaryDirectory() as tmpdir:
            with patch("main.run_checks", return_value=passing):
                ok = main(["verify", "--html", "--out", tmpdir])
            html_written = (Path(tmpdir) / "verify_report.html").exists()
            with patch("main.run_checks", return_value=failing):
                bad = quiet_main(["verify", "--out", tmpdir])
            report = (Path(tmpdir) / "verify_report.md").read_text(encoding="utf-8")

        self.assertEqual(ok, 0)
        self.assertTrue(html_written)
        self.assertEqual(bad, 3)
        self.assertIn("| gap exponent |", report)


if __name__ == "__main__":
    unittest.main()
