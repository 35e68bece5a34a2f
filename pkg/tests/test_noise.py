"""Noise families: degeneracy, constants, Taylor remainder bound, increments."""

import numpy as np
import pytest

from phasesep import (
    Field,
    Grid,
    NoiseFamily,
    ParameterError,
    apply_noise_increment,
    constants,
    make_polynomial_family,
    taylor_bound_check,
)
from phasesep.noise import tail_increment

# Oracle values (exact polynomial root maximization + 50-digit arithmetic)
# for s0=3, K=16, sigma0=0.1, gamma=1 with max-over-orders Sobolev sup norms.
C1_GOLDEN = 0.29060880291327644781
C2_GOLDEN = 50751.117838459444584


def adversarial_family(s0=3, K=4, sigma0=0.1, gamma=1.0):
    """Profile vanishing to order 1 while claiming degeneracy order s0."""
    k = np.arange(K, dtype=float)
    return NoiseFamily(s0=s0, K=K, sigma0=sigma0, gamma=gamma, vanish_order=1,
                       sigmas=sigma0 * (k + 1.0) ** (-gamma))


class TestFamilyConstruction:
    def test_factory_validation(self):
        with pytest.raises(ParameterError):
            make_polynomial_family(0, 8, 0.1, 1.0)
        with pytest.raises(ParameterError):
            make_polynomial_family(3, 0, 0.1, 1.0)
        with pytest.raises(ParameterError):
            make_polynomial_family(3, 8, -0.1, 1.0)
        with pytest.raises(ParameterError):
            make_polynomial_family(3, 8, 0.1, 0.5)

    def test_vanishes_at_barriers(self, family):
        for k in (0, family.K - 1):
            assert family.h(k, 1.0) == 0.0
            assert family.h(k, -1.0) == 0.0

    def test_point_values(self, family):
        assert family.h(0, 0.0) == pytest.approx(0.1, rel=1e-15)
        assert family.h(0, 0.5) == pytest.approx(0.02373046875, rel=1e-15)

    def test_degeneracy_bound(self, family):
        # |h_k(x)| <= sigma_k * 2^(s0+2) * (1-|x|)^(s0+2) on a dense grid
        xs = np.linspace(-0.9999999, 0.9999999, 20001)
        m = family.s0 + 2
        for k in (0, 7, 15):
            bound = family.sigmas[k] * 2.0**m * (1.0 - np.abs(xs)) ** m
            assert np.all(np.abs(family.h(k, xs)) <= bound * (1 + 1e-12))


class TestConstants:
    def test_golden_values(self, family, potential):
        nc = constants(family, potential)
        assert nc.c1 == pytest.approx(C1_GOLDEN, rel=1e-9)
        assert nc.c2 == pytest.approx(C2_GOLDEN, rel=1e-9)

    def test_zero_family(self, potential):
        nc = constants(make_polynomial_family(3, 8, 0.0, 1.0), potential)
        assert nc.c1 == 0.0 and nc.c2 == 0.0

    def test_amplitude_scaling(self, potential):
        a = constants(make_polynomial_family(3, 8, 0.1, 1.0), potential)
        b = constants(make_polynomial_family(3, 8, 0.2, 1.0), potential)
        assert b.c1 == pytest.approx(2.0 * a.c1, rel=1e-13)
        assert b.c2 == pytest.approx(2.0 * a.c2, rel=1e-13)

    def test_truncation_monotone_and_convergent(self, potential):
        # constants nondecreasing in K; increments negligible beyond K = 256
        # for a gamma = 2 tail
        cs = [constants(make_polynomial_family(3, K, 0.1, 2.0), potential).c1
              for K in (4, 16, 64, 256, 512, 1024)]
        assert all(b >= a for a, b in zip(cs, cs[1:]))
        assert cs[-1] - cs[-3] < 1e-8

    def test_lipschitz_sum_bound(self, family, potential, rng):
        # sum_k |h_k(a)-h_k(b)|^2 <= c1^2 |a-b|^2 on 1e4 random pairs
        nc = constants(family, potential)
        a = rng.uniform(-0.999, 0.999, 10_000)
        b = rng.uniform(-0.999, 0.999, 10_000)
        diff_sq = (family.profile(a) - family.profile(b)) ** 2 * family.sigma_sq_sum()
        assert np.all(diff_sq <= nc.c1**2 * (a - b) ** 2 * (1 + 1e-12) + 1e-300)


class TestTaylorBound:
    def test_polynomial_family_passes(self, family):
        for k in (0, family.K - 1):
            res = taylor_bound_check(family, k)
            assert res.passed
            assert res.measured["max_ratio"] <= 1.0 + 1e-9

    def test_adversarial_family_fails(self):
        res = taylor_bound_check(adversarial_family(), 0)
        assert not res.passed

    def test_endpoints_both_sides_zero(self, family):
        # degenerate boundary case: h and the bound both vanish at +-1
        assert family.h(0, 1.0) == 0.0 and family.h(0, -1.0) == 0.0

    def test_mode_range(self, family):
        with pytest.raises(ParameterError):
            taylor_bound_check(family, family.K)


class TestIncrements:
    def test_single_mode_at_zero(self, family):
        g = Grid(d=1, n=5, L=1.0)
        u = Field(g, np.zeros(5))
        dW = np.zeros(family.K)
        dW[0] = 0.7
        out = apply_noise_increment(family, u.values, dW)
        assert np.allclose(out, family.sigmas[0] * 0.7, rtol=1e-15)

    def test_zero_increments(self, family):
        out = apply_noise_increment(family, np.full(7, 0.3), np.zeros(family.K))
        assert np.all(out == 0.0)

    def test_uniform_half(self, family):
        dW = np.zeros(family.K)
        dW[0] = 1.0
        out = apply_noise_increment(family, np.full(4, 0.5), dW)
        assert np.allclose(out, 0.02373046875, rtol=1e-15)

    def test_shape_mismatch(self, family):
        with pytest.raises(ParameterError):
            apply_noise_increment(family, np.zeros(4), np.zeros(family.K + 1))

    def test_vanishing_near_barriers(self, family):
        eps = 1e-4
        dW = np.ones(family.K)
        out = apply_noise_increment(family, np.array([1.0 - eps]), dW)
        # vanishes to order eps^(s0+2)
        assert abs(out[0]) <= 2.0 ** (family.s0 + 2) * eps ** (family.s0 + 2) * np.sum(family.sigmas)


def test_tail_increment_small_for_fast_decay():
    fam = make_polynomial_family(3, 256, 0.1, 2.0)
    assert tail_increment(fam) < 1e-6
