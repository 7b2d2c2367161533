import hashlib
import math
import unittest

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from qiebench.errors import InputValidationError
from qiebench.numerics import RandomStream, as_matrix, derive_stream, singular_values, student_t_ppf, student_t_sf, student_t_two_sided, svd


def t_density(x, df):
    log_norm = gammaln((df + 1) / 2) - gammaln(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(log_norm - (df + 1) / 2 * math.log1p(x * x / df))


class TestMatrix(unittest.TestCase):
    def test_row_vector_promoted(self):
        """A 1-D input becomes a single row"""
        self.assertEqual(as_matrix([1.0, 2.0, 3.0]).shape, (1, 3))

    def test_rejects_bad_input(self):
        """Non-finite, empty and 3-D inputs are rejected"""
        for bad in ([[1.0, np.nan]], [[np.inf]], np.zeros((0, 3)), np.zeros((2, 2, 2))):
            with self.assertRaises(InputValidationError):
                as_matrix(bad)


class TestSvd(unittest.TestCase):
    def test_diagonal(self):
        """diag(3, 1) has singular values 3 and 1"""
        np.testing.assert_allclose(svd(np.diag([3.0, 1.0])).singular_values, [3.0, 1.0])

    def test_identity(self):
        """The 4x4 identity has four unit singular values"""
        np.testing.assert_allclose(singular_values(np.eye(4)), np.ones(4))

    def test_matches_gram_eigenvalues(self):
        """Singular values are square roots of the eigenvalues of X^T X"""
        x = np.random.default_rng(3).normal(size=(6, 3))
        eigenvalues = np.linalg.eigh(x.T @ x)[0][::-1]
        np.testing.assert_allclose(svd(x).singular_values, np.sqrt(np.clip(eigenvalues, 0, None)), atol=1e-8)

    def test_reconstruction_and_orthonormality(self):
        """U diag(s) V^T rebuilds the input and both factors have orthonormal columns"""
        x = np.random.default_rng(4).normal(size=(8, 5))
        result = svd(x)
        np.testing.assert_allclose(result.reconstruct(), x, atol=1e-10)
        np.testing.assert_allclose(result.left_vectors.T @ result.left_vectors, np.eye(5), atol=1e-10)
        np.testing.assert_allclose(result.right_vectors.T @ result.right_vectors, np.eye(5), atol=1e-10)
        self.assertTrue(np.all(np.diff(result.singular_values) <= 0))

    def test_result_is_read_only(self):
        """Decomposition arrays cannot be modified in place"""
        result = svd(np.eye(3))
        with self.assertRaises(ValueError):
            result.singular_values[0] = 5.0

    def test_non_finite_rejected(self):
        with self.assertRaises(InputValidationError):
            svd([[1.0, np.inf], [0.0, 1.0]])


class TestRandomStream(unittest.TestCase):
    def test_same_key_same_draws(self):
        """(42, "a") twice gives the same first 100 draws"""
        np.testing.assert_array_equal(derive_stream(42, "a").uniform(size=100), derive_stream(42, "a").uniform(size=100))

    def test_label_changes_draws(self):
        """Different labels under one seed give different draws"""
        self.assertNotEqual(derive_stream(42, "a").uniform(), derive_stream(42, "b").uniform())

    def test_reference_generator(self):
        """Draws match a Philox generator keyed directly by the seed and the label digest"""
        digest = hashlib.sha256(b"a").digest()
        words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
        reference = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=[42, *words])))
        self.assertEqual(derive_stream(42, "a").uniform(), reference.uniform(0.0, 1.0))

    def test_choice_without_replacement(self):
        """Chosen indices are distinct, sorted and in range"""
        picked = derive_stream(1, "pick").choice_without_replacement(100, 10)
        self.assertEqual(len(set(picked.tolist())), 10)
        self.assertTrue(np.all(np.diff(picked) > 0))
        self.assertTrue(picked.min() >= 0 and picked.max() < 100)
        np.testing.assert_array_equal(derive_stream(1, "pick").choice_without_replacement(5, 10), np.arange(5))

    def test_negative_seed_rejected(self):
        with self.assertRaises(InputValidationError):
            RandomStream(-1, "x")


class TestStudentT(unittest.TestCase):
    def test_symmetry_point(self):
        """sf(0) is one half for every df"""
        for df in (1, 4, 30):
            self.assertAlmostEqual(student_t_sf(0.0, df), 0.5, places=12)

    def test_cauchy(self):
        """df=1 is Cauchy: P(T > 1) = 1/4"""
        self.assertAlmostEqual(student_t_sf(1.0, 1), 0.25, places=12)

    def test_against_numeric_integration(self):
        """sf agrees with adaptive quadrature of the density"""
        for t, df in ((2.776, 4), (1.3, 9), (3.1, 9)):
            oracle, _ = integrate.quad(t_density, t, np.inf, args=(df,))
            self.assertAlmostEqual(student_t_sf(t, df), oracle, delta=1e-6)
        self.assertAlmostEqual(student_t_sf(2.776, 4), 0.025, delta=1e-3)

    def test_two_sided_and_quantile(self):
        """Two-sided p doubles the tail; ppf inverts sf"""
        self.assertAlmostEqual(student_t_two_sided(-2.776, 4), 2 * student_t_sf(2.776, 4), places=12)
        self.assertAlmostEqual(student_t_sf(student_t_ppf(0.975, 9), 9), 0.025, places=9)

    def test_complementary_tails(self):
        """sf(t) + sf(-t) = 1 for every t and df"""
        for df in (1, 4, 9, 30):
            for t in (0.1, 0.7, 2.0, 5.5):
                self.assertAlmostEqual(student_t_sf(t, df) + student_t_sf(-t, df), 1.0, delta=1e-12)

    def test_monotone_decreasing(self):
        """The survival function strictly decreases over a grid of t"""
        grid = np.linspace(-6.0, 6.0, 61)
        for df in (2, 9):
            values = np.array([student_t_sf(t, df) for t in grid])
            self.assertTrue(np.all(np.diff(values) < 0))

    def test_invalid_df(self):
        with self.assertRaises(InputValidationError):
            student_t_sf(1.0, 0)
