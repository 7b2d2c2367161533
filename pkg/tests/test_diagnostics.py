import math
import unittest

import numpy as np

from qiebench.diagnostics import KAPPA_CAP, condition_number, effective_rank, linear_cka, spectral_report, subsample_rows
from qiebench.errors import InputValidationError
from qiebench.numerics import derive_stream


class TestEffectiveRank(unittest.TestCase):
    def test_rank_one(self):
        """A rank-1 matrix has effective rank 1"""
        self.assertAlmostEqual(effective_rank(np.outer([1.0, 2.0, 3.0], [4.0, 5.0])), 1.0, delta=1e-9)

    def test_equal_singular_values(self):
        """r equal nonzero singular values give effective rank r"""
        self.assertAlmostEqual(effective_rank(np.diag([2.0, 2.0, 2.0, 0.0])), 3.0, delta=1e-9)
        q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(8, 5)))
        self.assertAlmostEqual(effective_rank(q), 5.0, delta=1e-9)

    def test_all_zero(self):
        with self.assertRaises(InputValidationError):
            effective_rank(np.zeros((3, 3)))


class TestConditionNumber(unittest.TestCase):
    def test_orthogonal(self):
        """Orthogonal matrices are perfectly conditioned"""
        q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(6, 6)))
        result = condition_number(q)
        self.assertAlmostEqual(result.value, 1.0, delta=1e-9)
        self.assertFalse(result.capped)

    def test_diagonal(self):
        self.assertAlmostEqual(condition_number(np.diag([10.0, 1.0])).value, 10.0, delta=1e-9)

    def test_tiny_singular_values_ignored(self):
        """Singular values below 1e-12 * sigma_max do not count"""
        self.assertAlmostEqual(condition_number(np.diag([10.0, 2.0, 1e-14])).value, 5.0, delta=1e-9)

    def test_capped(self):
        """Only sigma_max surviving caps kappa and flags it"""
        result = condition_number(np.diag([1.0, 1e-20]))
        self.assertEqual(result.value, KAPPA_CAP)
        self.assertTrue(result.capped)
        self.assertAlmostEqual(result.log10, 15.0)

    def test_all_zero(self):
        with self.assertRaises(InputValidationError):
            condition_number(np.zeros((2, 2)))


class TestSpectralReport(unittest.TestCase):
    def test_fields(self):
        """The report bundles erank, kappa and erank per column"""
        report = spectral_report(np.diag([4.0, 1.0, 1.0, 0.0]))
        self.assertEqual(report.output_dim, 4)
        self.assertAlmostEqual(report.condition_number, 4.0)
        self.assertAlmostEqual(report.log10_kappa, math.log10(4.0))
        self.assertAlmostEqual(report.normalized_erank, report.effective_rank / 4)
        self.assertFalse(report.condition_capped)


class TestLinearCka(unittest.TestCase):
    def setUp(self):
        self.x = np.random.default_rng(2).normal(size=(50, 6))

    def test_self_similarity(self):
        self.assertAlmostEqual(linear_cka(self.x, self.x).value, 1.0, delta=1e-9)

    def test_orthogonal_invariance(self):
        """Rotating one representation leaves CKA at 1"""
        q, _ = np.linalg.qr(np.random.default_rng(3).normal(size=(6, 6)))
        self.assertAlmostEqual(linear_cka(self.x, self.x @ q).value, 1.0, delta=1e-9)

    def test_isotropic_scaling_and_symmetry(self):
        y = np.random.default_rng(4).normal(size=(50, 3))
        a = linear_cka(self.x, y).value
        self.assertAlmostEqual(a, linear_cka(y, self.x).value, delta=1e-12)
        self.assertAlmostEqual(a, linear_cka(3.0 * self.x, y).value, delta=1e-12)
        self.assertTrue(0.0 <= a <= 1.0)

    def test_errors(self):
        """Row mismatch and zero-variance inputs are rejected"""
        with self.assertRaises(InputValidationError):
            linear_cka(self.x, self.x[:40])
        with self.assertRaises(InputValidationError):
            linear_cka(self.x, np.ones((50, 2)))

    def test_subsampling(self):
        """Above the row cap a stream-chosen subsample is used"""
        result = linear_cka(self.x, self.x ** 3, stream=derive_stream(0, "cka"), max_rows=20)
        self.assertEqual(result.sample_count, 20)
        np.testing.assert_array_equal(subsample_rows(10, None, 20), np.arange(10))
        with self.assertRaises(InputValidationError):
            subsample_rows(10, None, 1)

    def test_large_input_without_stream(self):
        """Above 2000 rows the default call subsamples the same rows every time"""
        x = np.random.default_rng(5).normal(size=(2500, 4))
        y = x + np.random.default_rng(6).normal(scale=0.5, size=(2500, 4))
        first = linear_cka(x, y)
        self.assertEqual(first.sample_count, 2000)
        self.assertEqual(first.value, linear_cka(x, y).value)
        self.assertAlmostEqual(linear_cka(x, x).value, 1.0, delta=1e-9)
        np.testing.assert_array_equal(subsample_rows(2500, None), subsample_rows(2500, None))

    def test_independent_gaussians(self):
        """Unrelated 500 x 50 Gaussian representations have low CKA"""
        rng = np.random.default_rng(7)
        self.assertLessEqual(linear_cka(rng.normal(size=(500, 50)), rng.normal(size=(500, 50))).value, 0.2)


class TestSpectralInvariance(unittest.TestCase):
    def setUp(self):
        self.x = np.random.default_rng(8).normal(size=(40, 6)) * [5.0, 3.0, 2.0, 1.0, 0.5, 0.1]

    def test_erank_orthogonal_and_scale_invariant(self):
        """Rotations from either side and uniform scaling keep the effective rank"""
        rng = np.random.default_rng(9)
        left, _ = np.linalg.qr(rng.normal(size=(40, 40)))
        right, _ = np.linalg.qr(rng.normal(size=(6, 6)))
        base = effective_rank(self.x)
        self.assertAlmostEqual(effective_rank(left @ self.x @ right), base, delta=1e-9)
        self.assertAlmostEqual(effective_rank(7.5 * self.x), base, delta=1e-9)

    def test_kappa_scale_invariant(self):
        base = condition_number(self.x).value
        self.assertAlmostEqual(condition_number(1e-3 * self.x).value / base, 1.0, delta=1e-9)
        self.assertAlmostEqual(condition_number(1e4 * self.x).value / base, 1.0, delta=1e-9)
