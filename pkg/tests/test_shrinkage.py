import numpy as np
import pytest

from blockstein.dgp import CandidateModel, Dgp, TrainingSample, generate_sample
from blockstein.exceptions import InvalidArgumentError, InvalidModelError
from blockstein.rng import RngStream
from blockstein.shrinkage import (ShrinkageConfig, fit, ols_theta, predict,
                                  rewrite_identity_check)


def _sample(seed=0, n=60, p=10):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:4] = [1.0, -0.5, 0.3, 0.2]
    Y = X @ beta + rng.standard_normal(n)
    return TrainingSample(X=X, Y=Y)


M = CandidateModel(block1=(0, 1, 2), block2=(3, 4, 5))


class TestShrinkageConfig:
    def test_negative_tuning_rejected(self):
        with pytest.raises(InvalidArgumentError):
            ShrinkageConfig(c1=-0.1)

    def test_default_positive_part_constants(self):
        m = CandidateModel(block1=(0, 1, 2, 3), block2=(4, 5, 6))
        c1, c2 = ShrinkageConfig().resolved(m)
        assert c1 == (4 - 2) / 4
        assert c2 == (3 - 2) / 3


class TestFit:
    def test_zero_tuning_gives_ols(self):
        s = _sample()
        f = fit(s, M, ShrinkageConfig(c1=0.0, c2=0.0))
        assert f.a1 == 0.0 and f.a2 == 0.0
        theta_ols = ols_theta(s, M)
        assert np.max(np.abs(f.theta_bjs - theta_ols)) <= 1e-10

    def test_huge_tuning_annihilates_fit(self):
        s = _sample()
        f = fit(s, M, ShrinkageConfig(c1=1e12, c2=1e12))
        assert f.a1 == 1.0 and f.a2 == 1.0
        assert np.max(np.abs(f.beta_hat)) == 0.0

    def test_factors_match_independent_formula(self):
        s = _sample(seed=3, n=60, p=10)
        m = CandidateModel(block1=(0, 1, 2), block2=(3, 4, 5))
        f = fit(s, m, ShrinkageConfig(c1=1.0, c2=1.0))
        # independent evaluation from raw matrices
        Z1 = s.X[:, [0, 1, 2]]
        Z2 = s.X[:, [3, 4, 5]]
        t1 = np.linalg.solve(Z1.T @ Z1, Z1.T @ s.Y)
        M1 = np.eye(s.n) - Z1 @ np.linalg.solve(Z1.T @ Z1, Z1.T)
        t2 = np.linalg.solve(Z2.T @ M1 @ Z2, Z2.T @ M1 @ s.Y)
        Z = s.X[:, [0, 1, 2, 3, 4, 5]]
        P = Z @ np.linalg.solve(Z.T @ Z, Z.T)
        rss = float(s.Y @ (np.eye(s.n) - P) @ s.Y)
        sig = rss / (s.n - 6)
        a1 = min(1.0, sig * 3 / float(t1 @ Z1.T @ Z1 @ t1))
        a2 = min(1.0, sig * 3 / float(t2 @ Z2.T @ M1 @ Z2 @ t2))
        assert abs(f.a1 - a1) <= 1e-10
        assert abs(f.a2 - a2) <= 1e-10
        assert abs(f.sigma_hat_sq - sig) <= 1e-10 * sig

    def test_block_coefficients_combine_correctly(self):
        s = _sample(seed=4)
        f = fit(s, M, ShrinkageConfig(c1=0.5, c2=0.5))
        Z1 = s.X[:, list(M.block1)]
        Z2 = s.X[:, list(M.block2)]
        C = np.linalg.solve(Z1.T @ Z1, Z1.T @ Z2)
        theta2_js = (1 - f.a2) * f.theta2_ls
        theta1_js = (1 - f.a1) * f.theta1_star_ls - C @ theta2_js
        assert np.max(np.abs(f.theta_bjs[:3] - theta1_js)) <= 1e-10
        assert np.max(np.abs(f.theta_bjs[3:] - theta2_js)) <= 1e-12

    def test_factors_in_unit_interval(self):
        for seed in range(15):
            s = _sample(seed=seed, n=40)
            cfg = ShrinkageConfig(c1=0.1 * seed, c2=2.0 - 0.1 * seed)
            f = fit(s, M, cfg)
            assert 0.0 <= f.a1 <= 1.0
            assert 0.0 <= f.a2 <= 1.0
            assert f.sigma_hat_sq >= 0.0

    def test_beta_hat_zero_off_model(self):
        s = _sample(seed=5, p=12)
        m = CandidateModel(block1=(1, 3, 5), block2=(7, 9, 11))
        f = fit(s, m)
        off = [i for i in range(12) if i not in m.indices]
        assert np.all(f.beta_hat[off] == 0.0)

    def test_increasing_c2_weakly_shrinks_block2(self):
        s = _sample(seed=6)
        prev_norm = np.inf
        prev_a2 = -1.0
        for c2 in [0.0, 0.5, 1.0, 2.0, 5.0]:
            f = fit(s, M, ShrinkageConfig(c1=0.5, c2=c2))
            norm = float(np.linalg.norm(f.theta_bjs[3:]))
            assert f.a2 >= prev_a2 - 1e-12
            assert norm <= prev_norm + 1e-12
            prev_a2, prev_norm = f.a2, norm

    def test_model_too_large_rejected(self):
        s = _sample(n=6)
        with pytest.raises(InvalidModelError):
            fit(s, M)

    def test_sigma_hat_is_rss_over_dof(self):
        s = _sample(seed=7)
        f = fit(s, M)
        Z = s.X[:, list(M.indices)]
        theta_hat, _, _, _ = np.linalg.lstsq(Z, s.Y, rcond=None)
        rss = float(np.sum((s.Y - Z @ theta_hat) ** 2))
        assert abs(f.sigma_hat_sq - rss / (s.n - 6)) <= 1e-10


class TestPredict:
    def test_zero_coefficients_predict_zero(self):
        s = _sample()
        f = fit(s, M, ShrinkageConfig(c1=1e12, c2=1e12))
        assert predict(f, np.ones(10)) == 0.0

    def test_zero_input_predicts_zero(self):
        s = _sample()
        f = fit(s, M)
        assert predict(f, np.zeros(10)) == 0.0

    def test_full_and_block_paths_agree(self):
        s = _sample(seed=8)
        f = fit(s, M, ShrinkageConfig(c1=0.7, c2=0.7))
        x0 = np.random.default_rng(9).standard_normal(10)
        got = predict(f, x0)
        expected = float(x0[[0, 1, 2, 3, 4, 5]] @ f.theta_bjs)
        assert abs(got - expected) <= 1e-10 * max(1.0, abs(expected))

    def test_dimension_mismatch_rejected(self):
        s = _sample()
        f = fit(s, M)
        with pytest.raises(InvalidArgumentError):
            predict(f, np.ones(9))


class TestRewriteIdentity:
    def test_equal_factors_collapse(self):
        s = _sample(seed=10)
        f = fit(s, M, ShrinkageConfig(c1=0.0, c2=0.0))
        assert rewrite_identity_check(f, s, M) <= 1e-10

    def test_random_fit_satisfies_identity(self):
        for seed in range(10):
            s = _sample(seed=seed)
            f = fit(s, M, ShrinkageConfig(c1=0.8, c2=1.2))
            assert rewrite_identity_check(f, s, M) <= 1e-9

    def test_orthogonal_blocks_decouple(self):
        rng = np.random.default_rng(11)
        n = 60
        # construct design with exactly orthogonal blocks via QR
        Q, _ = np.linalg.qr(rng.standard_normal((n, 6)))
        X = Q * np.sqrt(n)
        Y = X @ np.array([1.0, -1.0, 0.5, 0.2, 0.1, 0.3]) + rng.standard_normal(n)
        s = TrainingSample(X=X, Y=Y)
        m = CandidateModel(block1=(0, 1, 2), block2=(3, 4, 5))
        f = fit(s, m, ShrinkageConfig(c1=0.5, c2=0.5))
        theta1_ls = ols_theta(s, m)[:3]
        assert np.max(np.abs(f.theta_bjs[:3] - (1 - f.a1) * theta1_ls)) <= 1e-10


class TestDegenerateResponse:
    def test_zero_response_gives_no_shrinkage_denominator(self):
        # Y = 0 makes both quadratic forms zero; the factors saturate at 1
        rng = np.random.default_rng(12)
        s = TrainingSample(X=rng.standard_normal((30, 6)), Y=np.zeros(30))
        f = fit(s, M, ShrinkageConfig(c1=1.0, c2=1.0))
        assert f.a1 == 1.0 and f.a2 == 1.0

    def test_zero_tuning_beats_zero_denominator(self):
        rng = np.random.default_rng(13)
        s = TrainingSample(X=rng.standard_normal((30, 6)), Y=np.zeros(30))
        f = fit(s, M, ShrinkageConfig(c1=0.0, c2=0.0))
        assert f.a1 == 0.0 and f.a2 == 0.0
