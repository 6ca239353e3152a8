import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbur.links import (Link, QuantileSpec, compute_c, link_apply,
                        link_inverse, theta_from_phi)


def bisect_c(u, iters=200):
    """Independent root of 3c^2 - 2c^3 = u by bisection on (0, 1)."""
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if 3 * mid * mid - 2 * mid**3 < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestComputeC:
    def test_median_level(self):
        assert compute_c(0.5) == pytest.approx(0.5, abs=1e-15)

    def test_quarter_level_matches_bisection(self):
        # frozen from the bisection oracle
        assert compute_c(0.25) == pytest.approx(0.3263518223330697, abs=1e-12)
        assert compute_c(0.25) == pytest.approx(bisect_c(0.25), abs=1e-12)

    def test_three_quarter_level_symmetry(self):
        assert compute_c(0.75) == pytest.approx(0.6736481776669303, abs=1e-12)
        assert compute_c(0.75) == pytest.approx(1.0 - bisect_c(0.25), abs=1e-12)

    def test_dense_grid_against_bisection(self):
        for u in np.linspace(0.001, 0.999, 199):
            c = compute_c(u)
            assert abs(3 * c * c - 2 * c**3 - u) < 1e-12
            assert abs(c - bisect_c(u)) < 1e-10

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=1e-5, max_value=1.0 - 1e-5))
    def test_cubic_and_symmetry_properties(self, u):
        c = compute_c(u)
        assert 0.0 < c < 1.0
        assert abs(3 * c * c - 2 * c**3 - u) < 1e-12
        assert abs(compute_c(u) + compute_c(1.0 - u) - 1.0) < 1e-12

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.2, 1.5, 1e-7, 1 - 1e-7, math.nan])
    def test_rejects_out_of_window_levels(self, u):
        with pytest.raises(ValueError):
            compute_c(u)


class TestQuantileSpec:
    def test_caches_constant_and_log(self):
        spec = QuantileSpec(0.25, Link.LOGLOG)
        assert spec.c == pytest.approx(0.3263518223330697, abs=1e-12)
        assert spec.ln_c == pytest.approx(math.log(spec.c), abs=1e-15)
        assert spec.ln_c < 0

    def test_accepts_string_link(self):
        assert QuantileSpec(0.5, "logit").link is Link.LOGIT

    def test_rejects_bad_level(self):
        with pytest.raises(ValueError):
            QuantileSpec(0.0, Link.LOGIT)


class TestLinkInverse:
    def test_logit_at_zero(self):
        assert link_inverse(Link.LOGIT, 0.0) == pytest.approx(0.5, abs=1e-15)

    def test_loglog_at_zero(self):
        assert link_inverse(Link.LOGLOG, 0.0) == pytest.approx(math.exp(-1.0), abs=1e-15)

    def test_logit_complement_identity(self):
        rng = np.random.default_rng(3)
        phi = rng.uniform(-30, 30, 500)
        total = link_inverse(Link.LOGIT, phi) + link_inverse(Link.LOGIT, -phi)
        assert np.max(np.abs(total - 1.0)) < 1e-12

    @pytest.mark.parametrize("link", list(Link))
    @pytest.mark.parametrize("phi", [-800.0, -40.0, 0.0, 40.0, 800.0])
    def test_overflow_safe_and_inside_unit_interval(self, link, phi):
        v = link_inverse(link, phi)
        assert 0.0 < v < 1.0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            link_inverse(Link.LOGIT, math.inf)


class TestLinkApply:
    @pytest.mark.parametrize("link", list(Link))
    def test_roundtrip(self, link):
        for q in (0.01, 0.2, 0.5, 0.9, 0.99):
            assert link_inverse(link, link_apply(link, q)) == pytest.approx(q, rel=1e-12)

    def test_rejects_boundary(self):
        with pytest.raises(ValueError):
            link_apply(Link.LOGIT, 1.0)


class TestThetaFromPhi:
    def test_logit_median_unit(self):
        spec = QuantileSpec(0.5, Link.LOGIT)
        assert theta_from_phi(spec, 0.0) == pytest.approx(1.0, abs=1e-14)

    def test_loglog_median_hand_value(self):
        # -e^0 / ln(0.5) evaluated by hand
        spec = QuantileSpec(0.5, Link.LOGLOG)
        assert theta_from_phi(spec, 0.0) == pytest.approx(1.4426950408889634, abs=1e-12)

    def test_logit_reference_intercept(self):
        # independent evaluation: ln(sigmoid(0.1714)) / ln(0.5)
        spec = QuantileSpec(0.5, Link.LOGIT)
        mu = 1.0 / (1.0 + math.exp(-0.1714))
        expected = math.log(mu) / math.log(0.5)
        got = theta_from_phi(spec, 0.1714)
        assert got == pytest.approx(expected, abs=1e-14)
        assert got == pytest.approx(0.8817, abs=5e-5)

    def test_loglog_strictly_increasing_in_phi(self):
        spec = QuantileSpec(0.3, Link.LOGLOG)
        grid = np.linspace(-30, 30, 601)
        th = theta_from_phi(spec, grid)
        assert np.all(np.diff(th) > 0)

    def test_logit_strictly_decreasing_in_phi(self):
        # larger phi -> larger modeled quantile -> mass shifts toward 1 ->
        # smaller theta; the worked value theta(0.1714) = 0.8817 < theta(0) = 1
        # pins the direction
        spec = QuantileSpec(0.3, Link.LOGIT)
        grid = np.linspace(-30, 30, 601)
        th = theta_from_phi(spec, grid)
        assert np.all(np.diff(th) < 0)

    @pytest.mark.parametrize("link", list(Link))
    @pytest.mark.parametrize("phi", [-800.0, -50.0, 0.0, 50.0, 700.0])
    def test_always_positive(self, link, phi):
        spec = QuantileSpec(0.4, link)
        assert theta_from_phi(spec, phi) > 0.0

    def test_loglog_level_shift_identity(self):
        # same theta field at level u' once phi shifts by ln(ln c(u')/ln c(u));
        # equivalently, fitted intercepts differ by ln(ln c(u)/ln c(u'))
        u, up = 0.25, 0.75
        s1, s2 = QuantileSpec(u, Link.LOGLOG), QuantileSpec(up, Link.LOGLOG)
        shift = math.log(math.log(compute_c(up)) / math.log(compute_c(u)))
        for phi in np.linspace(-3, 3, 41):
            t1 = theta_from_phi(s1, phi)
            t2 = theta_from_phi(s2, phi + shift)
            assert t2 == pytest.approx(t1, rel=1e-12)
