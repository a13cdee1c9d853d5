import numpy as np
import pytest

from blockstein.dgp import CandidateModel, Dgp, generate_sample
from blockstein.exceptions import InvalidArgumentError, InvalidModelError
from blockstein.rng import RngStream
from blockstein.selection import ModelCollection, collection_summary, select
from blockstein.shrinkage import ShrinkageConfig

M_A = CandidateModel(block1=(0, 1, 2), block2=(3, 4, 5))
M_B = CandidateModel(block1=(0, 1, 2), block2=(6, 7, 8))
M_C = CandidateModel(block1=(6, 7, 8), block2=(9, 10, 11))


def _dgp(p=12):
    beta = np.zeros(p)
    beta[:4] = [1.0, 0.8, 0.5, 0.3]
    return Dgp(beta=beta, sigma=np.eye(p), noise_var=1.0)


class TestModelCollection:
    def test_empty_rejected(self):
        with pytest.raises(InvalidArgumentError):
            ModelCollection(models=())

    def test_summary_single_model(self):
        coll = ModelCollection(models=(M_A,))
        assert collection_summary(coll) == (3, 6, 1)

    def test_summary_two_models(self):
        big = CandidateModel(block1=(0, 1, 2, 3, 4), block2=(5, 6, 7, 8, 9))
        coll = ModelCollection(models=(M_A, big))
        assert collection_summary(coll) == (3, 10, 2)

    def test_summary_matches_recount(self):
        rng = np.random.default_rng(0)
        models = []
        for _ in range(20):
            k1 = int(rng.integers(3, 7))
            k2 = int(rng.integers(3, 7))
            idx = rng.permutation(30)[:k1 + k2]
            models.append(CandidateModel(block1=tuple(idx[:k1]),
                                         block2=tuple(idx[k1:])))
        coll = ModelCollection(models=tuple(models))
        r, s, count = collection_summary(coll)
        assert r == min(len(m.block1) for m in models)
        assert s == max(len(m.block1) + len(m.block2) for m in models)
        assert count == 20


class TestSelect:
    def test_singleton_collection(self):
        dgp = _dgp()
        sample = generate_sample(dgp, 100, RngStream(0))
        res = select(sample, ModelCollection(models=(M_A,)), oracle=dgp)
        assert res.selected_empirical == 0
        assert res.selected_oracle == 0
        assert res.ratio_stats["log_true_ratio"] == 0.0

    def test_duplicate_models_tie_break_to_first(self):
        dgp = _dgp()
        sample = generate_sample(dgp, 100, RngStream(1))
        res = select(sample, ModelCollection(models=(M_A, M_A)))
        assert res.selected_empirical == 0
        assert res.reports[0].rho_sq_hat == res.reports[1].rho_sq_hat

    def test_selected_minimizes_estimate(self):
        dgp = _dgp()
        sample = generate_sample(dgp, 100, RngStream(2))
        res = select(sample, ModelCollection(models=(M_A, M_B, M_C)), oracle=dgp)
        hats = [r.rho_sq_hat for r in res.reports]
        assert hats[res.selected_empirical] == min(hats)
        trues = [r.rho_sq_true for r in res.reports]
        assert trues[res.selected_oracle] == min(trues)

    def test_permutation_consistency(self):
        dgp = _dgp()
        sample = generate_sample(dgp, 100, RngStream(3))
        res1 = select(sample, ModelCollection(models=(M_A, M_B, M_C)))
        res2 = select(sample, ModelCollection(models=(M_C, M_A, M_B)))
        order = [1, 2, 0]  # position of each original model in the permuted list
        hats1 = [r.rho_sq_hat for r in res1.reports]
        hats2 = [r.rho_sq_hat for r in res2.reports]
        for i, j in enumerate(order):
            assert hats1[i] == hats2[j]
        assert order[res1.selected_empirical] == res2.selected_empirical

    def test_ratio_signs(self):
        dgp = _dgp()
        for seed in range(20):
            sample = generate_sample(dgp, 80, RngStream(seed + 10))
            res = select(sample, ModelCollection(models=(M_A, M_B, M_C)),
                         oracle=dgp)
            # the empirical pick can only look worse under the oracle metric
            assert res.ratio_stats["log_true_ratio"] >= 0.0
            hats = [r.rho_sq_hat for r in res.reports]
            assert (hats[res.selected_empirical]
                    <= hats[res.selected_oracle] + 1e-15)

    def test_oversized_model_rejected_with_index(self):
        dgp = _dgp()
        sample = generate_sample(dgp, 10, RngStream(4))
        with pytest.raises(InvalidModelError, match="model 1"):
            select(sample, ModelCollection(models=(
                CandidateModel(block1=(0, 1, 2), block2=(3, 4, 5)),
                CandidateModel(block1=(0, 1, 2, 6, 7),
                               block2=(3, 4, 5, 8, 9)),
            )))

    def test_signal_model_usually_wins(self):
        beta = np.zeros(12)
        beta[:6] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5]
        dgp = Dgp(beta=beta, sigma=np.eye(12), noise_var=1.0)
        coll = ModelCollection(models=(M_A, M_C))  # M_A holds the signal
        wins = 0
        matches = 0
        for rep in range(100):
            sample = generate_sample(dgp, 200, RngStream(rep))
            res = select(sample, coll, oracle=dgp)
            wins += int(res.selected_empirical == 0)
            matches += int(res.selected_empirical == res.selected_oracle)
        assert wins >= 90
        assert matches >= 60
