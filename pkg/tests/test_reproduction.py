"""
End-to-end reproduction checks on the built-in Wine table, a norm-only
control and the two synthetic controls. The full-size synthetic runs are
marked slow.
"""

import unittest

import numpy as np
import pytest

from qiebench.config import DatasetSpec, RunConfig
from qiebench.data import Dataset, stratified_split
from qiebench.harness import run_benchmark
from qiebench.methods import MethodContext, fit_method
from qiebench.numerics import derive_stream
from qiebench.probe import compute_metrics, predict, train_logistic


def mean_accuracy(report, dataset, method):
    return float(np.mean([c.accuracy for c in report.cells if c.dataset == dataset and c.method == method]))


def cka_entry(report, dataset, a, b):
    return next(e for e in report.cka if (e.dataset, e.method_a, e.method_b) == (dataset, a, b))


class TestWine(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        config = RunConfig(datasets=(DatasetSpec(name="wine", source="builtin"),), methods=("amplitude", "angle", "basis", "raw"), timing_repeats=1)
        cls.report = run_benchmark(config)

    def test_accuracy(self):
        """Raw and angle near 0.97, basis near 0.92, amplitude well below"""
        self.assertAlmostEqual(mean_accuracy(self.report, "wine", "raw"), 0.978, delta=0.03)
        self.assertAlmostEqual(mean_accuracy(self.report, "wine", "angle"), 0.972, delta=0.03)
        self.assertAlmostEqual(mean_accuracy(self.report, "wine", "basis"), 0.917, delta=0.05)
        self.assertLessEqual(mean_accuracy(self.report, "wine", "amplitude"), 0.75)

    def test_amplitude_rank_collapse(self):
        """Amplitude-encoded Wine collapses to an effective rank near 1.4"""
        eranks = [c.effective_rank for c in self.report.cells if c.method == "amplitude"]
        self.assertAlmostEqual(float(np.mean(eranks)), 1.38, delta=0.3)

    def test_angle_redundancy(self):
        self.assertAlmostEqual(cka_entry(self.report, "wine", "angle", "raw").mean, 0.971, delta=0.02)

    def test_output_dims(self):
        dims = {c.method: c.output_dim for c in self.report.cells}
        self.assertEqual(dims, {"amplitude": 16, "angle": 26, "basis": 104, "raw": 13})

    def test_amplitude_significantly_worse(self):
        amplitude = next(c for c in self.report.comparisons if c.method == "amplitude")
        self.assertEqual(amplitude.outcome, "worse")
        self.assertAlmostEqual(amplitude.wilcoxon_pvalue, 0.0625)


class TestScaleErasure(unittest.TestCase):
    def test_norm_only_labels(self):
        """Labels carried only by the row norm are lost to amplitude encoding but kept by the raw baseline"""
        rng = np.random.default_rng(11)
        directions = np.abs(rng.normal(size=(6000, 8)))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        labels = np.repeat([0, 1], 3000)
        radius = np.where(labels == 0, 1.0, 3.0)[:, None]
        ds = Dataset(name="norms", features=directions * radius, labels=labels, class_count=2)
        split = stratified_split(ds, 0.2, derive_stream(11, "norms/split"))
        train, test = split.train_indices, split.test_indices

        accuracy = {}
        for method in ("amplitude", "raw"):
            pipeline = fit_method(method, ds.features[train], MethodContext(dataset="norms", seed=11))
            model = train_logistic(pipeline.transform(ds.features[train]), ds.labels[train], class_count=2)
            predicted = predict(model, pipeline.transform(ds.features[test]))
            accuracy[method] = compute_metrics(ds.labels[test], predicted, 2).accuracy
        self.assertLessEqual(accuracy["amplitude"], 0.55)
        self.assertGreaterEqual(accuracy["raw"], 0.95)


@pytest.mark.slow
class TestHighRankNoise(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        config = RunConfig(datasets=(DatasetSpec(name="highrank", source="highrank"),), methods=("amplitude", "angle", "basis", "raw"), seeds=(7, 42), timing_repeats=1)
        cls.report = run_benchmark(config)

    def test_amplitude_spectrum(self):
        """Without a dominant column the amplitude spectrum stays flat"""
        for cell in (c for c in self.report.cells if c.method == "amplitude"):
            self.assertGreaterEqual(cell.effective_rank, 180.0)
            self.assertLessEqual(cell.condition_number, 4.0)

    def test_amplitude_matches_raw(self):
        amplitude = mean_accuracy(self.report, "highrank", "amplitude")
        self.assertAlmostEqual(amplitude, mean_accuracy(self.report, "highrank", "raw"), delta=0.03)

    def test_cka_direction(self):
        """Amplitude and angle agree closely, amplitude and basis do not"""
        self.assertGreaterEqual(cka_entry(self.report, "highrank", "amplitude", "angle").mean, 0.9)
        self.assertLessEqual(cka_entry(self.report, "highrank", "amplitude", "basis").mean, 0.4)
        self.assertGreaterEqual(cka_entry(self.report, "highrank", "angle", "raw").mean, 0.95)


@pytest.mark.slow
class TestParity(unittest.TestCase):
    def test_near_chance(self):
        """No linear probe over these maps can beat chance on tenth-order parity"""
        config = RunConfig(datasets=(DatasetSpec(name="parity", source="parity"),), timing_repeats=1)
        report = run_benchmark(config)
        for method in config.methods:
            accuracy = mean_accuracy(report, "parity", method)
            self.assertGreaterEqual(accuracy, 0.45, msg=method)
            self.assertLessEqual(accuracy, 0.56, msg=method)
