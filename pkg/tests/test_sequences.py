"""Derived sequences: odds ratios, rho cocycle, prefix sums, inverses."""

import math
from itertools import count

import numpy as np
import pytest

import stratawalk as sw
from stratawalk.sequences import MonotoneCache, MonotonicityError, generalized_inverse

from conftest import random_periodic_env


class TestMonotoneCache:
    def test_value_and_inverse(self):
        cache = MonotoneCache((float((n + 1) ** 2) for n in count(0)), name="sq")
        assert cache.value(3) == 16.0
        # sup{n : f(n) <= 10} with f(n) = (n+1)^2
        assert cache.inverse(10.0) == 2
        assert cache.inverse(1.0) == 0

    def test_inverse_below_first_value_clamps_to_zero(self):
        cache = MonotoneCache((float(n + 5) for n in count(0)), name="shift")
        inv, provable = cache.inverse_flagged(2.0)
        assert inv == 0 and provable

    def test_inverse_of_bounded_sequence_with_limit_hint(self):
        cache = MonotoneCache((5.0 for _ in count(0)), name="const", limit_hint=5.0)
        inv, provable = cache.inverse_flagged(7.0)
        assert math.isinf(inv) and provable
        assert cache.inverse(4.999) == 0

    def test_inverse_budget_exhaustion_is_flagged(self):
        cache = MonotoneCache((5.0 for _ in count(0)), name="const", max_len=50)
        inv, provable = cache.inverse_flagged(7.0)
        assert math.isinf(inv) and not provable

    def test_decreasing_generator_rejected(self):
        cache = MonotoneCache((float(-n) for n in count(0)), name="bad")
        with pytest.raises(MonotonicityError):
            cache.value(3)

    def test_generalized_inverse_function(self):
        assert generalized_inverse(lambda n: (n + 1) ** 2, 10.0) == 2
        assert generalized_inverse(lambda n: n + 1, 0.5) == 0


@pytest.fixture(scope="module")
def two_periodic():
    rows = (
        (0.2, 0.3, 0.5, [[1], 0.7], [[-1], 0.3]),
        (0.35, 0.25, 0.4, [[2], 0.5], [[-1], 0.5]),
    )
    env = sw.family(sw.Tabulated(window=(0, 1), rows=rows))
    return env, sw.build(env)


class TestSequenceSet:
    def test_a_and_b_match_strata(self, two_periodic):
        env, seq = two_periodic
        for n in (-3, -1, 0, 2, 5):
            law = env.stratum(n)
            assert seq.a(n) == pytest.approx(law.q / law.p)
            assert seq.b(n) == pytest.approx(1.0 + law.q / law.p)

    def test_rho_cocycle_both_sides(self, two_periodic):
        _, seq = two_periodic
        # rho_n = a_1 ... a_n; rho_{-n} = 1 / (a_0 a_{-1} ... a_{-(n-1)})
        for n in range(1, 9):
            prod = np.prod([seq.a(k) for k in range(1, n + 1)])
            assert seq.rho(n) == pytest.approx(prod, rel=1e-12)
            prod_m = np.prod([seq.a(-k) for k in range(0, n)])
            assert seq.rho(-n) == pytest.approx(1.0 / prod_m, rel=1e-12)
        assert seq.rho(0) == 1.0

    def test_rho_inv_is_reciprocal(self, two_periodic):
        _, seq = two_periodic
        for n in (-7, -2, 0, 3, 8):
            assert seq.rho_inv(n) == pytest.approx(1.0 / seq.rho(n), rel=1e-12)

    def test_a_plus_array_matches_scalars(self, two_periodic):
        _, seq = two_periodic
        arr = seq.a_plus_array(6)
        assert np.allclose(arr, [seq.a(k) for k in range(1, 7)])

    def test_logrho_plus_array(self, two_periodic):
        _, seq = two_periodic
        arr = seq.logrho_plus_array(5)
        assert np.allclose(arr, [seq.logrho(k) for k in range(1, 6)])

    def test_v_prefix_sums(self, two_periodic):
        # the minus side is the plus side of the reflected environment,
        # whose rho sequence is rho'_k = a_0 rho_{-k-1}
        _, seq = two_periodic
        a0 = seq.a(0)
        for n in range(0, 8):
            vp = sum(seq.rho(k) for k in range(0, n + 1))
            vm = a0 * sum(seq.rho(-k) for k in range(1, n + 2))
            assert seq.vplus.value(n) == pytest.approx(vp, rel=1e-12)
            assert seq.vminus.value(n) == pytest.approx(vm, rel=1e-12)
        assert seq.vplus.value(0) == 1.0
        assert seq.vminus.value(0) == pytest.approx(1.0, rel=1e-14)

    def test_w_prefix_sums(self, two_periodic):
        _, seq = two_periodic
        a0 = seq.a(0)
        for n in range(0, 8):
            wp = sum(seq.rho_inv(k) for k in range(0, n + 1))
            wm = sum(seq.rho_inv(-k) for k in range(1, n + 2)) / a0
            assert seq.wplus.value(n) == pytest.approx(wp, rel=1e-12)
            assert seq.wminus.value(n) == pytest.approx(wm, rel=1e-12)
        assert seq.wminus.value(0) == pytest.approx(1.0, rel=1e-14)

    def test_shift_cocycle(self, two_periodic, rng):
        env, seq = two_periodic
        for _ in range(20):
            m = int(rng.integers(-6, 7))
            n = int(rng.integers(0, 7))
            shifted = sw.StratifiedEnvironment(
                env.d, lambda k, m=m: env.stratum(k + m), env.delta
            )
            sseq = sw.build(shifted)
            lhs = seq.logrho(m + n) - seq.logrho(m)
            assert lhs == pytest.approx(sseq.logrho(n), abs=1e-10)

    def test_exact_logrho_hook_agrees_with_products(self):
        env = sw.family(sw.AntisymPowerLaw(d=1, alpha=1.7, c=1))
        seq = sw.build(env)
        for n in (-9, -3, 0, 4, 11):
            direct = 1.7 * math.log(max(1, abs(n)))
            assert seq.logrho(n) == pytest.approx(direct, abs=1e-12)
        # numeric product route on a metadata-free copy
        bare = sw.StratifiedEnvironment(1, env.stratum, env.delta)
        bseq = sw.build(bare)
        for n in (-9, -3, 4, 11):
            assert bseq.logrho(n) == pytest.approx(seq.logrho(n), abs=1e-10)


class TestPsi:
    def test_flat_environment_closed_form(self):
        env = sw.family(sw.Homogeneous())
        seq = sw.build(env)
        for n in (1, 2, 10, 50):
            assert seq.psi_squared(n, n) == pytest.approx(2.0 * n * n, rel=1e-12)
            assert seq.psi(n) == pytest.approx(math.sqrt(2.0) * n, rel=1e-12)
            assert seq.psi_plus(n) == pytest.approx(float(n), rel=1e-12)
            assert seq.psi_minus(n) == pytest.approx(float(n), rel=1e-12)
        assert seq.psi_squared(0, 0) == 0.0

    def test_negative_arguments_rejected(self):
        seq = sw.build(sw.family(sw.Homogeneous()))
        with pytest.raises(ValueError):
            seq.psi_squared(-1, 2)

    def test_monotone_in_each_argument(self, rng):
        env = random_periodic_env(rng)
        seq = sw.build(env)
        vals = [seq.psi_squared(m, 7) for m in range(0, 12)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        vals = [seq.psi_squared(7, n) for n in range(0, 12)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_dominated_variation_of_inverse(self, rng):
        # psi^{-1}(K x) <= 2 K^2 psi^{-1}(x) for x >= psi(1), K >= 1
        for _ in range(3):
            env = random_periodic_env(rng)
            seq = sw.build(env)
            psic = seq.psi_cache("sym")
            x0 = seq.psi(1)
            for K in (2.0, 5.0, 10.0):
                for x in (x0, 3.7 * x0, 19.0 * x0):
                    lhs = psic.inverse(K * x)
                    rhs = psic.inverse(x)
                    assert rhs >= 1
                    assert lhs <= 2.0 * K * K * rhs


class TestVerticalClassification:
    def test_flat_is_recurrent(self):
        seq = sw.build(sw.family(sw.Homogeneous()))
        assert sw.vertical_classification(seq) == "Recurrent"

    def test_downward_drift_is_transient(self):
        seq = sw.build(sw.family(sw.Homogeneous(p=0.4, q=0.8 / 3, r=1 / 3)))
        assert sw.vertical_classification(seq) == "Transient"

    def test_halfpipe_is_recurrent(self):
        seq = sw.build(sw.family(sw.HalfPipe(base=2.0, m=1)))
        assert sw.vertical_classification(seq) == "Recurrent"

    def test_antisym_metadata_path(self):
        seq = sw.build(sw.family(sw.AntisymPowerLaw(d=1, alpha=2.0, c=1)))
        assert sw.vertical_classification(seq) == "Recurrent"

    def test_numeric_path_without_metadata(self):
        env = sw.family(sw.Homogeneous(p=0.4, q=0.8 / 3, r=1 / 3))
        bare = sw.StratifiedEnvironment(1, env.stratum, env.delta)
        assert sw.vertical_classification(sw.build(bare)) == "Transient"
        env2 = sw.family(sw.Homogeneous())
        bare2 = sw.StratifiedEnvironment(1, env2.stratum, env2.delta)
        assert sw.vertical_classification(sw.build(bare2)) == "Recurrent"
