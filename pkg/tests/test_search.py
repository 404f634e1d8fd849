import itertools
import math

import numpy as np
import pytest

from fracnb import synthetic
from fracnb.criterion import BOOLEAN, FRACTIONAL, IncrementalEvaluator, RegularizerSpec, criterion
from fracnb.data import PrepConfig, dataset_from_arrays, prepare
from fracnb.search import (
    SearchConfig,
    SearchResult,
    ffwbw_boolean,
    fnb_train,
    increment_schedule,
    init_for_gradient,
    snb_train,
)


def noise_data(N=500, K=10, seed=1, max_parts=2):
    rng = np.random.default_rng(seed)
    raw = dataset_from_arrays(rng.normal(size=(N, K)), rng.integers(0, 2, N))
    return prepare(raw, PrepConfig(max_parts=max_parts))[0]


def one_signal_data(N=600, n_noise=6, seed=2):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, N)
    X = np.column_stack([2.5 * y + rng.normal(size=N)] + [rng.normal(size=N) for _ in range(n_noise)])
    return prepare(dataset_from_arrays(X, y), PrepConfig(max_parts=2))[0]


def boolean_spec(data, **kw):
    return RegularizerSpec.for_data(data, variant=BOOLEAN, **kw)


def fractional_spec(data, **kw):
    return RegularizerSpec.for_data(data, variant=FRACTIONAL, **kw)


class TestSchedule:
    def test_n4(self):
        assert increment_schedule(4) == [0.5]

    def test_n1000(self):
        incs = increment_schedule(1000)
        assert incs[-1] == 2.0**-9 and len(incs) == 9

    def test_defaults(self):
        cfg = SearchConfig()
        assert cfg.starts(50, 1000) == math.ceil(math.log(50 * 1000))
        assert cfg.fnb_passes(50, 1000) == 1 + math.ceil(math.log(50) / math.log(1000))


class TestFFWBW:
    def test_nothing_helps_gives_empty_subset(self):
        data = noise_data()
        spec = boolean_spec(data, lam=1.0)
        ev = IncrementalEvaluator(data, np.zeros(data.K), spec)
        assert all(ev.trial(k, 1.0).total >= ev.total for k in range(data.K))
        res = ffwbw_boolean(data, spec)
        np.testing.assert_array_equal(res.best_w, 0.0)
        assert res.criterion == res.null_criterion

    def test_single_informative_variable(self):
        data = one_signal_data()
        spec = boolean_spec(data, lam=1.0)
        signal = np.eye(data.K)[0]
        assert criterion(data, signal, spec).total < criterion(data, np.zeros(data.K), spec).total
        for k in range(1, data.K):
            assert criterion(data, signal + np.eye(data.K)[k], spec).total > criterion(data, signal, spec).total
        res = ffwbw_boolean(data, spec)
        np.testing.assert_array_equal(res.best_w, signal)

    def test_update_budget(self):
        data, _ = prepare(synthetic.informative_plus_noise(n_noise=15, N=300))
        res = ffwbw_boolean(data, boolean_spec(data), SearchConfig(max_repeats=2))
        assert res.evaluations <= 4 * data.K * 2

    def test_criterion_is_full_recompute(self):
        data, _ = prepare(synthetic.informative_plus_noise(n_noise=10, N=300))
        spec = boolean_spec(data)
        res = ffwbw_boolean(data, spec)
        assert abs(res.criterion - criterion(data, res.best_w, spec).total) < 1e-8

    def test_accepted_moves_strictly_improve(self):
        data, _ = prepare(synthetic.informative_plus_noise(n_noise=10, N=300))
        res = ffwbw_boolean(data, boolean_spec(data))
        crits = [res.null_criterion] + res.subset_criteria
        assert all(b < a for a, b in zip(crits, crits[1:]))

    @pytest.mark.parametrize("seed", range(3))
    def test_bounded_by_exhaustive_minimum(self, seed):
        data, _ = prepare(synthetic.toy(N=40, K=8, seed=seed))
        spec = boolean_spec(data)
        exhaustive = min(criterion(data, np.array(b, float), spec).total
                         for b in itertools.product((0, 1), repeat=8))
        res = ffwbw_boolean(data, spec)
        assert exhaustive - 1e-9 <= res.criterion <= res.null_criterion

    def test_needs_boolean_prior(self):
        data = noise_data()
        with pytest.raises(ValueError):
            ffwbw_boolean(data, fractional_spec(data))


class TestSNB:
    def test_identical_starts_average_to_indicator(self):
        data = one_signal_data()
        res = snb_train(data, boolean_spec(data, lam=1.0))
        np.testing.assert_array_equal(res.final_w, np.eye(data.K)[0])

    def test_averaging_definition(self):
        data, _ = prepare(synthetic.informative_plus_noise(n_noise=10, N=300))
        res = snb_train(data, boolean_spec(data))
        np.testing.assert_allclose(res.final_w, np.mean(res.accepted_subsets, axis=0))
        assert np.all((res.final_w >= 0) & (res.final_w <= 1))

    def test_average_keeps_more_variables(self):
        data, _ = prepare(synthetic.informative_plus_noise(n_noise=20, N=400))
        res = snb_train(data, boolean_spec(data))
        assert res.selected_count >= int(np.count_nonzero(res.best_w))

    def test_reproducible(self):
        data, _ = prepare(synthetic.informative_plus_noise(n_noise=10, N=300))
        a = snb_train(data, boolean_spec(data), SearchConfig(seed=4))
        b = snb_train(data, boolean_spec(data), SearchConfig(seed=4))
        np.testing.assert_array_equal(a.final_w, b.final_w)
        assert a.subset_criteria == b.subset_criteria

    def test_compression_weighted_mode(self):
        data, _ = prepare(synthetic.informative_plus_noise(n_noise=5, N=300))
        res = snb_train(data, boolean_spec(data), SearchConfig(averaging="compression"))
        assert np.all((res.final_w >= 0) & (res.final_w <= 1))
        with pytest.raises(ValueError):
            snb_train(data, boolean_spec(data), SearchConfig(averaging="median"))


class TestFNB:
    def test_all_noise_gives_null_model(self):
        data = noise_data()
        spec = fractional_spec(data, lam=1.0)
        ev = IncrementalEvaluator(data, np.zeros(data.K), spec)
        # oracle: no single increment from zero helps
        for k in range(data.K):
            for inc in increment_schedule(data.N):
                assert ev.trial(k, inc).total >= ev.total
        np.testing.assert_array_equal(fnb_train(data, spec).final_w, 0.0)

    def test_dyadic_weights(self):
        data, _ = prepare(synthetic.informative_plus_noise(n_noise=10, N=300))
        res = fnb_train(data, fractional_spec(data))
        finest = increment_schedule(data.N)[-1]
        m = res.final_w / finest
        np.testing.assert_array_equal(m, np.round(m))
        assert np.any((res.final_w > 0) & (res.final_w < 1))

    def test_criterion_consistent_and_below_null(self):
        data, _ = prepare(synthetic.informative_plus_noise(n_noise=10, N=300))
        spec = fractional_spec(data)
        res = fnb_train(data, spec)
        assert abs(res.criterion - criterion(data, res.final_w, spec).total) < 1e-8
        assert res.criterion <= res.null_criterion

    def test_boolean_iterates_match_snb_criterion(self):
        data, _ = prepare(synthetic.toy(N=30, K=5, seed=2))
        fs, bs = fractional_spec(data), boolean_spec(data)
        for bits in itertools.product((0.0, 1.0), repeat=5):
            w = np.array(bits)
            assert abs(criterion(data, w, fs).total - criterion(data, w, bs).total) <= 1e-12

    def test_sparser_than_snb_average_on_redundant_data(self):
        data, _ = prepare(synthetic.redundant(n_copies=3, n_noise=4))
        fnb = fnb_train(data, fractional_spec(data))
        snb = snb_train(data, boolean_spec(data))
        assert fnb.selected_count <= snb.selected_count

    def test_reproducible(self):
        data, _ = prepare(synthetic.informative_plus_noise(n_noise=10, N=300))
        a = fnb_train(data, fractional_spec(data), SearchConfig(seed=9))
        b = fnb_train(data, fractional_spec(data), SearchConfig(seed=9))
        np.testing.assert_array_equal(a.final_w, b.final_w)


class TestInit:
    def test_uniform(self):
        np.testing.assert_array_equal(init_for_gradient(K=3, policy="uniform"), [0.5, 0.5, 0.5])

    def test_pass_through(self):
        w = np.array([0.25, 0.0, 1.0])
        res = SearchResult(w, w, 0.0, 0.0, 0)
        out = init_for_gradient(res)
        np.testing.assert_array_equal(out, w)
        assert out is not w

    def test_needs_result(self):
        with pytest.raises(ValueError):
            init_for_gradient(None)
