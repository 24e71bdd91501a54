"""Directional characteristic functions, reflections, and guards."""

import math

import numpy as np
import pytest

import stratawalk as sw
from stratawalk.chi import (
    FREQ_WINDOW,
    ChiEvaluator,
    R_error,
    SmallnessViolation,
    chi_D,
    phi_stratum,
    psi_stratum,
    reflect,
)

from conftest import flat_drift_env, random_periodic_env


def sym_homogeneous(p=1 / 3, q=1 / 3, r=1 / 3):
    return sw.family(sw.Homogeneous(p=p, q=q, r=r))


class TestStratumWeights:
    def test_phi_small_t_limit(self):
        law = sym_homogeneous().stratum(0)
        assert phi_stratum(law, 1e-9, np.array([1.0])) == pytest.approx(1.0, abs=1e-12)

    def test_phi_modulus_below_one(self):
        rng = np.random.default_rng(2)
        env = random_periodic_env(rng, d=1)
        for k in range(-4, 5):
            for t in (0.05, 0.2, 0.45):
                assert abs(phi_stratum(env.stratum(k), t, np.array([1.0]))) < 1.0

    def test_psi_invariant_under_pq_swap(self):
        mu = sw.HorizontalLaw([(2,)], [1.0])
        a = sw.StratumLaw(0.2, 0.4, 0.4, mu)
        b = sw.StratumLaw(0.4, 0.2, 0.4, mu)
        u = np.array([1.0])
        assert psi_stratum(a, 0.3, u) == psi_stratum(b, 0.3, u)

    def test_psi_unit_modulus_bound(self):
        # 1/(1 - ix) has modulus 1/sqrt(1 + x^2) <= 1
        law = flat_drift_env(drift_point=(3,)).stratum(0)
        x = 0.3 * float(law.eta[0]) / law.b
        val = psi_stratum(law, 0.3, np.array([1.0]))
        assert abs(val) == pytest.approx(1.0 / math.hypot(1.0, x))


class TestReflect:
    def test_rho_identity(self, rng):
        # reflected ladder: rho'_n = a_0 rho_{-n-1}
        for _ in range(5):
            env = random_periodic_env(rng, d=1)
            seq = sw.build(env)
            refl = sw.build(reflect(env))
            a0 = env.stratum(0).a
            for n in range(-6, 7):
                assert refl.rho(n) == pytest.approx(a0 * seq.rho(-n - 1), rel=1e-12)

    def test_involution_on_rho(self, rng):
        env = random_periodic_env(rng, d=1)
        seq = sw.build(env)
        back = sw.build(reflect(reflect(env)))
        for n in range(-5, 6):
            assert back.rho(n) == pytest.approx(seq.rho(n), rel=1e-12)

    def test_metadata_propagation(self):
        env = sw.family(sw.HalfPipe(base=2.0))
        refl = reflect(env)
        info = refl.family_info
        assert info["name"].endswith("-reflected")
        tail = env.family_info["vertical_tail"]
        rtail = info["vertical_tail"]
        assert rtail["a_plus"] == pytest.approx(1.0 / tail["a_minus"])
        assert rtail["a_minus"] == pytest.approx(1.0 / tail["a_plus"])

    def test_logrho_hook_matches_numeric(self):
        env = sw.family(sw.AntisymPowerLaw(alpha=1.5, c=1))
        refl = reflect(env)
        seq = sw.build(refl)
        hook = refl.family_info["logrho"]
        for n in range(-8, 9):
            assert hook(n) == pytest.approx(seq.logrho(n), abs=1e-10)

    def test_swaps_up_and_down(self, rng):
        env = random_periodic_env(rng, d=1)
        refl = reflect(env)
        for k in range(-5, 6):
            src = env.stratum(-k)
            law = refl.stratum(k)
            assert law.p == src.q and law.q == src.p and law.r == src.r


class TestEvaluator:
    def test_frequency_window(self):
        ev = ChiEvaluator(sym_homogeneous())
        for t in (0.0, -0.1, FREQ_WINDOW + 1e-9, 0.9):
            with pytest.raises(ValueError):
                ev.evaluate(t)
        # the endpoint itself is admissible
        res = ev.evaluate(FREQ_WINDOW, with_surrogate=False)
        assert 0.0 < res.value.real < 1.0

    def test_transient_refused_and_override(self):
        env = sw.family(sw.Homogeneous(p=0.4, q=0.8 / 3, r=1 / 3))
        with pytest.raises(ValueError):
            ChiEvaluator(env)
        ev = ChiEvaluator(env, check_vertical=False)
        assert ev.vertical == "Transient"

    def test_symmetric_homogeneous_value(self):
        ev = ChiEvaluator(sym_homogeneous())
        res = ev.evaluate(0.3, with_surrogate=False)
        # symmetric environment: both sides agree, the value is real
        assert res.p_up == pytest.approx(0.5)
        assert res.chi_plus.value == pytest.approx(res.chi_minus.value, rel=1e-9)
        assert abs(res.value.imag) < 1e-12
        assert 0.0 < res.value.real < 1.0
        assert res.vertical == "Recurrent"

    def test_tail_bound_combination(self):
        ev = ChiEvaluator(sym_homogeneous())
        res = ev.evaluate(0.2, with_surrogate=False)
        expect = res.p_up * res.chi_plus.tail_bound + (
            1.0 - res.p_up
        ) * res.chi_minus.tail_bound
        assert res.tail_bound == pytest.approx(expect)
        assert res.f_plus is None and res.f_value is None

    def test_surrogate_on_drifting_strata(self):
        env = flat_drift_env(drift_point=(1,))
        ev = ChiEvaluator(env)
        res = ev.evaluate(0.25)
        assert res.f_plus is not None and res.f_minus is not None
        assert res.f_plus.converged and res.f_minus.converged
        fv = res.f_value
        assert fv is not None and abs(fv) < 1.0
        # drift makes the transform genuinely complex
        assert abs(res.value.imag) > 1e-6

    def test_direction_handling(self):
        env = random_periodic_env(np.random.default_rng(4), d=2)
        ev = ChiEvaluator(env)
        res = ev.evaluate(0.2, u=sw.Direction.from_angle(0.7), with_surrogate=False)
        assert res.u.shape == (2,)
        with pytest.raises(ValueError):
            ev.evaluate(0.2, u=sw.Direction.axis(1))  # wrong dimension

    def test_chi_d_convenience(self):
        env = sym_homogeneous()
        direct = chi_D(env, 0.3)
        res = ChiEvaluator(env).evaluate(0.3, with_surrogate=False)
        assert direct == pytest.approx(res.value)


class TestSmallnessGuard:
    def test_forbidden_band_raises(self):
        # nearly frozen horizontal law with an inflated delta lands the
        # weight between the smallness bound and the degenerate ring
        mu = sw.HorizontalLaw([(-1,), (0,), (1,)], [0.01, 0.98, 0.01])
        fn = lambda n: sw.StratumLaw(1 / 3, 1 / 3, 1 / 3, mu)
        env = sw.StratifiedEnvironment(1, fn, delta=1 / 3)
        ev = ChiEvaluator(env)
        with pytest.raises(SmallnessViolation):
            ev.evaluate(0.4, with_surrogate=False)

    def test_degenerate_point_mass_allowed(self):
        # a point-mass law keeps |phi| = 1 exactly, which is legal
        env = flat_drift_env(drift_point=(2,))
        res = ChiEvaluator(env).evaluate(0.3, with_surrogate=False)
        assert np.isfinite(res.value.real)


class TestErrorRate:
    def test_window_and_transience_guards(self):
        seq = sw.build(sym_homogeneous())
        with pytest.raises(ValueError):
            R_error(seq, 0.51)
        with pytest.raises(ValueError):
            R_error(seq, 0.0)
        drift = sw.build(sw.family(sw.Homogeneous(p=0.4, q=0.8 / 3, r=1 / 3)))
        with pytest.raises(ValueError):
            R_error(drift, 0.2)

    def test_symmetric_environment_sides_agree(self):
        seq = sw.build(flat_drift_env(drift_point=(1,)))
        rp, rm = R_error(seq, 0.2)
        assert rp == pytest.approx(rm, rel=1e-9)
        assert 0.0 < rp < 1.0

    def test_increasing_in_t(self):
        seq = sw.build(flat_drift_env(drift_point=(1,)))
        vals = [R_error(seq, t)[0] for t in (0.05, 0.1, 0.2, 0.4)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_periodic_environment(self, rng):
        env = random_periodic_env(rng, d=1, p_equals_q=True)
        seq = sw.build(env)
        rp, rm = R_error(seq, 0.3)
        assert 0.0 < rp < 1.0 and 0.0 < rm < 1.0
