import math

import numpy as np
import pytest

from quantfit import (
    async_partition,
    average_basis,
    eval_sample_vector,
    example_basis,
    phase_fraction,
    sine_basis,
    sync_partition,
)


def subsets_as_sets(part):
    return {frozenset(int(i) for i in s) for s in part.subsets}


def check_covers(part, n_samples):
    seen = np.concatenate(part.subsets)
    assert np.sort(seen).tolist() == list(range(n_samples))
    for s in part.subsets:
        assert s.size > 0


class TestSyncPartition:
    def test_period_five(self):
        p = sync_partition(10, 2)
        assert len(p.subsets) == 5
        assert all(s.size == 2 for s in p.subsets)
        images = {int(n * 2 % 10) for s in p.subsets for n in s[:1]}
        assert images == {0, 2, 4, 6, 8}

    def test_twentyfour_three(self):
        p = sync_partition(24, 3)
        got = [s.tolist() for s in p.subsets]
        assert got == [[k, k + 8, k + 16] for k in range(8)]

    def test_all_singletons(self):
        p = sync_partition(4, 1)
        assert [s.tolist() for s in p.subsets] == [[0], [1], [2], [3]]

    def test_counts_and_cover_brute_force(self):
        for n_samples in range(2, 65):
            for cycles in range(1, n_samples):
                p = sync_partition(n_samples, cycles)
                d = math.gcd(cycles, n_samples)
                assert len(p.subsets) == n_samples // d
                assert all(s.size == d for s in p.subsets)
                check_covers(p, n_samples)
                # membership rule: n and n' share a subset iff nL = n'L (mod N)
                for s in p.subsets:
                    imgs = {int(n * cycles % n_samples) for n in s}
                    assert len(imgs) == 1

    def test_image_set_is_multiples_of_gcd(self):
        for n_samples in (12, 30, 64):
            for cycles in range(1, n_samples):
                d = math.gcd(cycles, n_samples)
                p = sync_partition(n_samples, cycles)
                imgs = {int(s[0] * cycles % n_samples) for s in p.subsets}
                assert imgs == set(range(0, n_samples, d))

    def test_bad_args(self):
        with pytest.raises(ValueError):
            sync_partition(10, 0)
        with pytest.raises(ValueError):
            sync_partition(10, 10)


class TestAsyncPartition:
    def test_documented_grouping(self):
        p = async_partition(24, 0.1245, 0.1)
        got = [s.tolist() for s in p.subsets]
        assert got == [[0], [1, 9, 17], [2, 10, 18], [3, 11, 19],
                       [4, 12, 20], [5, 13, 21], [6, 14, 22],
                       [7, 15, 23], [8, 16]]

    def test_epsilon_one_single_subset(self):
        p = async_partition(17, 0.37, 1.0)
        assert len(p.subsets) == 1
        assert p.subsets[0].tolist() == list(range(17))

    def test_matches_sync_for_rational_lam(self):
        for n_samples in range(2, 65):
            for cycles in range(1, n_samples):
                eps = 1.0 / (2 * n_samples + 1)
                a = async_partition(n_samples, cycles / n_samples, eps)
                s = sync_partition(n_samples, cycles)
                assert subsets_as_sets(a) == subsets_as_sets(s), \
                    (n_samples, cycles)

    def test_within_subset_phase_spread(self):
        for lam, eps in [(0.1245, 0.1), (0.31416, 0.02), (0.777, 0.005)]:
            p = async_partition(500, lam, eps)
            check_covers(p, 500)
            for s in p.subsets:
                u = phase_fraction(s, lam)
                assert np.max(u) - np.min(u) < eps

    def test_order_of_indices_is_canonical(self):
        p = async_partition(100, 0.137, 0.05)
        for s in p.subsets:
            assert np.all(np.diff(s) > 0)

    def test_no_wrap_merge(self):
        # phases 0.01 and 0.99 are within 0.05 circularly but must not share
        # a bin: near-0 and near-1 are different signal values in general
        lam = 0.49  # phases alternate 0, .49, .98, .47, .96, ...
        p = async_partition(10, lam, 0.05)
        for s in p.subsets:
            u = phase_fraction(s, lam)
            assert np.max(u) - np.min(u) < 0.05

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            async_partition(10, 0.1, 0.0)
        with pytest.raises(ValueError):
            async_partition(10, 0.1, 1.5)


class TestAverageBasis:
    def test_singletons_equal_raw_vectors(self):
        p = sync_partition(6, 1)
        ab = average_basis(p, sine_basis(), 1 / 6)
        for row, s in zip(ab.rows, p.subsets):
            np.testing.assert_allclose(
                row, eval_sample_vector(sine_basis(), int(s[0]), 1 / 6),
                atol=1e-15)

    def test_sync_members_identical(self):
        p = sync_partition(24, 3)
        lam = 3 / 24
        ab = average_basis(p, sine_basis(), lam)
        for row, s in zip(ab.rows, p.subsets):
            for n in s:
                np.testing.assert_allclose(
                    row, eval_sample_vector(sine_basis(), int(n), lam),
                    atol=1e-12)

    def test_direct_summation_oracle(self):
        p = async_partition(24, 0.1245, 0.1)
        ab = average_basis(p, example_basis(), 0.1245)
        idx = [s.tolist() for s in p.subsets].index([1, 9, 17])
        want = np.mean([eval_sample_vector(example_basis(), n, 0.1245)
                        for n in (1, 9, 17)], axis=0)
        np.testing.assert_allclose(ab.rows[idx], want, atol=1e-14)

    def test_rows_are_convex_combinations(self):
        p = async_partition(200, 0.2137, 0.03)
        lam = 0.2137
        ab = average_basis(p, sine_basis(), lam)
        for row, s in zip(ab.rows, p.subsets):
            evals = np.array([eval_sample_vector(sine_basis(), int(n), lam)
                              for n in s])
            assert np.all(row >= evals.min(axis=0) - 1e-12)
            assert np.all(row <= evals.max(axis=0) + 1e-12)

    def test_sizes(self):
        p = async_partition(24, 0.1245, 0.1)
        ab = average_basis(p, sine_basis(), 0.1245)
        assert ab.sizes.tolist() == [1, 3, 3, 3, 3, 3, 3, 3, 2]
