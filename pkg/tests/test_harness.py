import os
import tempfile
import unittest

import numpy as np

from qiebench.config import DatasetSpec, RunConfig
from qiebench.data import Dataset, write_csv
from qiebench.encodings import AmplitudeMap, BasisMap
from qiebench.errors import ConfigError, InputValidationError
from qiebench.harness import TIMING_FIELDS, cka_pairs, run_benchmark, time_encoding
from qiebench.report import canonicalize, render_markdown, spectral_rows, to_json

WINE = DatasetSpec(name="wine", source="builtin")


def wine_config(methods=("amplitude", "angle", "raw"), seeds=(7, 42), **kwargs) -> RunConfig:
    return RunConfig(datasets=(WINE,), methods=methods, seeds=seeds, timing_repeats=1, **kwargs)


class TestSharedSplit(unittest.TestCase):
    def test_methods_share_split(self):
        """Every method in a (dataset, seed) unit sees the same 36-row test set"""
        report = run_benchmark(wine_config(methods=("raw", "angle"), seeds=(7,)))
        self.assertEqual(len(report.cells), 2)
        raw, angle = report.cell("wine", "raw", 7), report.cell("wine", "angle", 7)
        self.assertEqual(raw.split_digest, angle.split_digest)
        self.assertEqual((raw.n_test, angle.n_test), (36, 36))
        self.assertEqual((raw.kind, angle.kind), ("classical", "qie"))
        self.assertEqual(report.comparisons, [])
        self.assertEqual(report.splits[0].test_class_counts, (12, 14, 10))

    def test_duplicate_seeds_rejected(self):
        with self.assertRaises(ConfigError):
            run_benchmark(wine_config(seeds=(7, 7)))


class TestRunBenchmark(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.config = wine_config()
        cls.report = run_benchmark(cls.config)

    def test_cell_order(self):
        """Cells come back in (dataset, method, seed) order"""
        keys = [c.key for c in self.report.cells]
        self.assertEqual(keys, sorted(keys))
        self.assertEqual(len(keys), 6)
        self.assertTrue(all(c.status == "ok" for c in self.report.cells))

    def test_cell_fields(self):
        angle = self.report.cell("wine", "angle", 42)
        self.assertEqual(angle.output_dim, 26)
        self.assertTrue(0.0 <= angle.accuracy <= 1.0)
        self.assertGreater(angle.effective_rank, 1.0)
        self.assertGreaterEqual(angle.encode_time_ms, 0.0)
        self.assertEqual(self.report.cell("wine", "amplitude", 7).output_dim, 16)
        with self.assertRaises(KeyError):
            self.report.cell("wine", "rff", 7)

    def test_results_exclude_timing(self):
        """The canonical dict holds no wall-clock values"""
        for cell in self.report.to_dict()["cells"]:
            for name in TIMING_FIELDS:
                self.assertNotIn(name, cell)

    def test_parallel_matches_serial(self):
        """The worker count does not change a single byte of the results"""
        parallel = run_benchmark(self.config, jobs=2)
        self.assertEqual(to_json(self.report.to_dict()), to_json(parallel.to_dict()))

    def test_cka_entries(self):
        """Each QIE pair plus QIE-versus-raw gets one entry averaged over both seeds"""
        pairs = [(e.method_a, e.method_b) for e in self.report.cka]
        self.assertEqual(pairs, [("amplitude", "angle"), ("amplitude", "raw"), ("angle", "raw")])
        for entry in self.report.cka:
            self.assertEqual(len(entry.values), 2)
            self.assertAlmostEqual(entry.mean, float(np.mean(entry.values)))
            self.assertTrue(0.0 <= entry.mean <= 1.0)

    def test_comparisons(self):
        """One comparison per QIE method and dataset, against raw as the only classical method"""
        self.assertEqual([c.method for c in self.report.comparisons], ["amplitude", "angle"])
        self.assertTrue(all(c.baseline == "raw" for c in self.report.comparisons))
        self.assertEqual(self.report.summary["comparisons"], 2)


class TestFailureHandling(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_missing_dataset_does_not_stop_run(self):
        """A dataset that fails to load is recorded and the others still run"""
        missing = DatasetSpec(name="beans", source="csv", path=os.path.join(self.temp_dir.name, "beans.csv"), label_column="Class")
        config = RunConfig(datasets=(missing, WINE), methods=("raw",), seeds=(7,), timing_repeats=1)
        report = run_benchmark(config)
        self.assertEqual([e["dataset"] for e in report.errors], ["beans"])
        self.assertEqual(report.errors[0]["error"], "DatasetNotFoundError")
        self.assertEqual(len(report.cells), 1)
        self.assertEqual(report.summary["dataset_errors"], 1)

    def test_poly_over_budget_is_infeasible(self):
        """An expansion above the feature budget yields an infeasible cell, not a failure"""
        report = run_benchmark(wine_config(methods=("poly2", "raw"), seeds=(7,), poly_max_features=50))
        cell = report.cell("wine", "poly2", 7)
        self.assertEqual(cell.status, "infeasible")
        self.assertIsNone(cell.accuracy)
        self.assertEqual(report.summary["infeasible"], 1)
        self.assertEqual(report.cell("wine", "raw", 7).status, "ok")

    def test_undefined_spectrum_keeps_metrics(self):
        """An all-zero encoding still reports probe metrics, with null spectral diagnostics"""
        labels = np.repeat([0, 1], 20)
        flat = Dataset(name="flat", features=np.full((40, 3), 2.5), labels=labels, class_count=2)
        path = os.path.join(self.temp_dir.name, "flat.csv")
        write_csv(flat, path)
        spec = DatasetSpec(name="flat", source="csv", path=path, label_column="label")
        report = run_benchmark(RunConfig(datasets=(spec,), methods=("amplitude", "basis", "raw"), seeds=(7,), timing_repeats=1))
        for method in ("basis", "raw"):
            cell = report.cell("flat", method, 7)
            self.assertEqual(cell.status, "ok")
            self.assertAlmostEqual(cell.accuracy, 0.5)
            self.assertIsNone(cell.effective_rank)
            self.assertIsNone(cell.condition_number)
        self.assertAlmostEqual(report.cell("flat", "amplitude", 7).effective_rank, 1.0, delta=1e-9)
        self.assertEqual(report.summary["ok"], 3)
        data = canonicalize(report.to_dict())
        self.assertIn("## Amplitude spectrum", render_markdown(data))
        basis = next(r for r in spectral_rows(data) if r["method"] == "basis")
        self.assertIsNone(basis["effective_rank"])

    def test_adding_method_keeps_other_cells(self):
        """Per-cell random streams make results independent of the method list"""
        small = run_benchmark(wine_config(methods=("angle", "rff"), seeds=(7,)))
        large = run_benchmark(wine_config(methods=("angle", "basis", "pca", "rff"), seeds=(7,)))
        for method in ("angle", "rff"):
            self.assertEqual(small.cell("wine", method, 7).to_dict(), large.cell("wine", method, 7).to_dict())


class TestTiming(unittest.TestCase):
    def test_time_encoding(self):
        """Encoding 10000 x 16 rows takes well under a second and never reports negative time"""
        x = np.random.default_rng(0).normal(size=(10000, 16))
        encoder = AmplitudeMap().fit(x)
        elapsed = time_encoding(encoder, x, repeats=3)
        self.assertGreaterEqual(elapsed, 0.0)
        self.assertLess(elapsed, 1000.0)

    def test_basis_slower_than_amplitude(self):
        """Bit expansion costs more than normalisation on the same rows"""
        x = np.random.default_rng(1).normal(size=(20000, 16))
        amplitude = time_encoding(AmplitudeMap().fit(x), x, repeats=5)
        basis = time_encoding(BasisMap().fit(x), x, repeats=5)
        self.assertGreater(basis, amplitude)

    def test_repeats_checked(self):
        with self.assertRaises(InputValidationError):
            time_encoding(AmplitudeMap(), np.ones((2, 2)), repeats=0)


class TestCkaPairs(unittest.TestCase):
    def test_pair_order(self):
        self.assertEqual(
            cka_pairs(["raw", "basis", "amplitude", "angle"]),
            [("amplitude", "angle"), ("amplitude", "basis"), ("angle", "basis"), ("amplitude", "raw"), ("angle", "raw"), ("basis", "raw")],
        )
        self.assertEqual(cka_pairs(["raw", "rff"]), [])


class TestSmallSuite(unittest.TestCase):
    def test_cell_count(self):
        """Four datasets, seven methods and five seeds give 140 cells"""
        datasets = (
            DatasetSpec(name="wine", source="builtin"),
            DatasetSpec(name="breast_cancer", source="builtin"),
            DatasetSpec(name="parity", source="parity", n=400, d=20, k=10),
            DatasetSpec(name="highrank", source="highrank", n=300, d=20),
        )
        report = run_benchmark(RunConfig(datasets=datasets, timing_repeats=1))
        self.assertEqual(len(report.cells), 140)
        self.assertEqual(report.summary["ok"], 140)
        self.assertEqual(len(report.comparisons), 12)
        self.assertEqual(report.errors, [])
