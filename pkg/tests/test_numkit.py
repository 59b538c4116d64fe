import math

import numpy as np
import pytest

from opinesum.numkit import (
    NotPositiveDefiniteError,
    SeededRng,
    affine,
    cholesky_lower,
    derive_seed,
    hadamard,
    log_softmax,
    matvec,
    multinomial_draw,
    sigmoid_elem,
    softmax,
    solve_spd,
    tanh_elem,
)


class TestSoftmax:
    def test_symmetry(self):
        np.testing.assert_allclose(softmax([0, 0, 0]), [1 / 3] * 3, rtol=0, atol=1e-15)

    def test_analytic(self):
        np.testing.assert_allclose(softmax([math.log(2), 0.0]), [2 / 3, 1 / 3], atol=1e-15)

    def test_matches_exp_normalize_oracle(self):
        rng = np.random.default_rng(11)
        v = rng.normal(size=10)
        expected = np.exp(v) / np.exp(v).sum()  # direct exp-normalize oracle
        np.testing.assert_allclose(softmax(v), expected, rtol=1e-14)

    def test_sums_to_one(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            out = softmax(rng.normal(scale=30, size=rng.integers(1, 20)))
            assert abs(out.sum() - 1.0) <= 1e-12
            assert np.all(out > 0)

    def test_shift_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            v = rng.normal(size=rng.integers(1, 12))
            c = rng.normal(scale=100)
            np.testing.assert_allclose(softmax(v + c), softmax(v), atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            softmax([])

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            softmax([0.0, float("nan")])

    def test_log_softmax_consistent(self):
        v = np.array([1.0, -2.0, 0.5, 3.0])
        np.testing.assert_allclose(log_softmax(v), np.log(softmax(v)), atol=1e-12)


class TestElementwise:
    def test_sigmoid_zero(self):
        np.testing.assert_allclose(sigmoid_elem([0.0]), [0.5])

    def test_sigmoid_tails_finite(self):
        out = sigmoid_elem([-1000.0, 1000.0])
        assert np.all(np.isfinite(out))
        assert out[0] < 1e-300 and out[1] == 1.0

    def test_tanh(self):
        np.testing.assert_allclose(tanh_elem([0.0, 1.0]), [0.0, math.tanh(1.0)])

    def test_hadamard_hand(self):
        np.testing.assert_allclose(hadamard([2, 3], [4, 5]), [8, 15])

    def test_hadamard_mismatch(self):
        with pytest.raises(ValueError):
            hadamard([1, 2], [1, 2, 3])

    def test_matvec_identity(self):
        np.testing.assert_allclose(matvec(np.eye(3), [1, 2, 3]), [1, 2, 3])

    def test_matvec_mismatch(self):
        with pytest.raises(ValueError):
            matvec(np.eye(3), [1, 2])

    def test_affine(self):
        np.testing.assert_allclose(affine(np.eye(2), [1, 2], [10, 20]), [11, 22])

    def test_affine_bias_mismatch(self):
        with pytest.raises(ValueError):
            affine(np.eye(2), [1, 2], [1, 2, 3])


class TestSolveSpd:
    def test_identity(self):
        b = np.array([4.0, -1.0, 2.5, 0.0])
        np.testing.assert_allclose(solve_spd(np.eye(4), b), b)

    def test_hand_2x2(self):
        # substitute back: [[2,1],[1,2]] @ [1,1] = [3,3]
        x = solve_spd([[2.0, 1.0], [1.0, 2.0]], [3.0, 3.0])
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-12)

    def test_residual_8x8(self):
        rng = np.random.default_rng(17)
        g = rng.normal(size=(8, 8))
        a = g.T @ g + np.eye(8)
        b = rng.normal(size=8)
        x = solve_spd(a, b)
        assert np.abs(a @ x - b).max() <= 1e-10

    def test_residual_bound_random_sizes(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            n = int(rng.integers(1, 65))
            g = rng.normal(size=(n, n))
            a = g.T @ g + np.eye(n)
            b = rng.normal(size=n)
            x = solve_spd(a, b)
            assert np.abs(a @ x - b).max() <= 1e-9 * (1 + np.abs(b).max())

    def test_not_positive_definite_names_pivot(self):
        a = np.diag([1.0, -1.0, 2.0])
        with pytest.raises(NotPositiveDefiniteError) as excinfo:
            solve_spd(a, [1.0, 1.0, 1.0])
        assert excinfo.value.pivot == 1
        assert "pivot 1" in str(excinfo.value)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            solve_spd([[1.0, 2.0], [0.0, 1.0]], [1.0, 1.0])

    def test_cholesky_factor(self):
        rng = np.random.default_rng(2)
        g = rng.normal(size=(6, 6))
        a = g.T @ g + np.eye(6)
        lower = cholesky_lower(a)
        np.testing.assert_allclose(lower @ lower.T, a, atol=1e-12)
        assert np.allclose(lower, np.tril(lower))


class TestSeededRng:
    def test_same_seed_same_sequence(self):
        a = SeededRng(42)
        b = SeededRng(42)
        assert [a.random() for _ in range(20)] == [b.random() for _ in range(20)]

    def test_different_seed_differs(self):
        assert SeededRng(1).random() != SeededRng(2).random()

    def test_uniform_range(self):
        draws = SeededRng(7).uniform(-0.08, 0.08, 1000)
        assert draws.min() >= -0.08 and draws.max() <= 0.08

    def test_derive_seed_stable(self):
        assert derive_seed(5, "init") == derive_seed(5, "init")
        assert derive_seed(5, "init") != derive_seed(5, "shuffle")
        assert derive_seed(5, "a", 1) != derive_seed(5, "a", 2)

    def test_spawn_matches_derive(self):
        assert SeededRng(9).spawn("x").seed == SeededRng(derive_seed(9, "x")).seed


class TestMultinomialDraw:
    def test_degenerate(self):
        for seed in range(20):
            assert multinomial_draw([1.0, 0.0, 0.0], 1, SeededRng(seed)) == [0]

    def test_exhaustion_is_permutation(self):
        out = multinomial_draw([0.5, 1.0, 2.0, 0.25], 4, SeededRng(3))
        assert sorted(out) == [0, 1, 2, 3]

    def test_marginal_frequency(self):
        # analytic marginal: P(first draw = 0) = 3/4
        hits = 0
        n = 20000
        for seed in range(n):
            hits += multinomial_draw([3.0, 1.0], 1, SeededRng(seed)) == [0]
        assert abs(hits / n - 0.75) <= 0.02

    def test_count_exceeds_support(self):
        with pytest.raises(ValueError):
            multinomial_draw([1.0, 0.0], 2, SeededRng(0))

    def test_negative_weight(self):
        with pytest.raises(ValueError):
            multinomial_draw([1.0, -0.5], 1, SeededRng(0))

    def test_zero_sum(self):
        with pytest.raises(ValueError):
            multinomial_draw([0.0, 0.0], 1, SeededRng(0))

    def test_uniform_chi_square(self):
        # 10k single draws over 8 equal weights; chi-square, 7 dof.
        k = 8
        n = 10000
        counts = np.zeros(k)
        rng = SeededRng(123)
        for _ in range(n):
            counts[multinomial_draw(np.ones(k), 1, rng)[0]] += 1
        expected = n / k
        stat = float(((counts - expected) ** 2 / expected).sum())
        # chi-square critical value, 7 dof, p = 0.001
        assert stat < 24.322

    def test_deterministic_sequences(self):
        a = [multinomial_draw([1, 2, 3, 4], 2, SeededRng(s)) for s in range(30)]
        b = [multinomial_draw([1, 2, 3, 4], 2, SeededRng(s)) for s in range(30)]
        assert a == b

    def test_count_zero(self):
        assert multinomial_draw([1.0, 2.0], 0, SeededRng(0)) == []
