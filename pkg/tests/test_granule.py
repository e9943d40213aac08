import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fuzzy_eix.errors import ContractError, RejectedInstanceError
from fuzzy_eix.granule import (
    UpdateParams,
    check_invariants,
    clamp,
    contains_inner,
    contains_outer,
    dim_memberships,
    expand_on_outer,
    expand_raw,
    expansion_factors,
    make_granule,
    membership,
    shrink_factors,
    shrink_on_inner,
    shrink_raw,
    slide,
    widths,
)

from conftest import box, random_granule


class TestMakeGranule:
    def test_center_and_bounds(self):
        g = make_granule((0.5, 0.5), 0.055)
        np.testing.assert_array_equal(g.center, [0.5, 0.5])
        np.testing.assert_allclose(g.inner.lower, [0.4725] * 2, rtol=0, atol=1e-15)
        np.testing.assert_allclose(g.inner.upper, [0.5275] * 2, rtol=0, atol=1e-15)
        np.testing.assert_allclose(g.outer.lower, [0.445] * 2, rtol=0, atol=1e-15)
        np.testing.assert_allclose(g.outer.upper, [0.555] * 2, rtol=0, atol=1e-15)
        assert g.support == 1

    def test_bounds_may_leave_unit_box(self):
        g = make_granule((0.0, 0.0), 0.1)
        np.testing.assert_allclose(g.inner.lower, [-0.05, -0.05])
        np.testing.assert_allclose(g.outer.lower, [-0.1, -0.1])

    def test_initial_widths(self):
        g = make_granule((0.2, 0.9, 0.4), 0.05)
        wi, wo = widths(g)
        np.testing.assert_allclose(wi, 0.05, atol=1e-15)
        np.testing.assert_allclose(wo, 0.10, atol=1e-15)

    @pytest.mark.parametrize("x", [(1.2, 0.5), (-0.01, 0.3), (np.nan, 0.2), (np.inf, 0.1)])
    def test_rejects_bad_coordinates(self, x):
        with pytest.raises(RejectedInstanceError):
            make_granule(x, 0.05)

    @pytest.mark.parametrize("eps", [0.0, -0.1, 0.6])
    def test_rejects_bad_epsilon(self, eps):
        with pytest.raises(ValueError):
            make_granule((0.5,), eps)


class TestContainment:
    @pytest.fixture
    def g(self):
        return make_granule((0.5, 0.5), 0.055)

    def test_inner(self, g):
        assert contains_inner(g, (0.5, 0.5))
        assert not contains_inner(g, (0.54, 0.5))
        assert not contains_inner(g, (g.inner.upper[0], 0.5))  # strict

    def test_outer(self, g):
        assert contains_outer(g, (0.54, 0.5))
        assert not contains_outer(g, (0.6, 0.5))
        assert contains_outer(g, (0.5, 0.5))

    def test_dimension_mismatch(self, g):
        with pytest.raises(ContractError):
            contains_inner(g, (0.5,))
        with pytest.raises(ContractError):
            contains_outer(g, (0.5, 0.5, 0.5))
        with pytest.raises(ContractError):
            membership(g, (0.5,))


class TestMembership:
    def test_center_is_full_member(self, g_1d):
        assert membership(g_1d, 0.5) == 1.0

    def test_outside_outer_is_zero(self):
        g = make_granule((0.5, 0.5), 0.055)
        assert membership(g, (0.5, 0.6)) == 0.0
        assert membership(g, (0.5, 0.6), "product") == 0.0

    def test_left_ramp_midpoint(self, g_1d):
        expected = (0.35 - 0.3) / (0.4 - 0.3)
        assert membership(g_1d, 0.35) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.5)

    def test_tnorms(self):
        g = box((0.5, 0.5), (0.4, 0.4), (0.6, 0.6), (0.3, 0.3), (0.7, 0.7))
        x = (0.35, 0.65)
        mu = dim_memberships(g, x)
        assert membership(g, x, "min") == pytest.approx(min(mu))
        assert membership(g, x, "product") == pytest.approx(mu[0] * mu[1])

    def test_closed_inner_box(self, g_1d):
        assert membership(g_1d, 0.4) == 1.0
        assert membership(g_1d, 0.6) == 1.0
        assert membership(g_1d, 0.3) == 0.0
        assert membership(g_1d, 0.7) == 0.0

    def test_unknown_tnorm(self, g_1d):
        with pytest.raises(ValueError):
            membership(g_1d, 0.5, "lukasiewicz")

    @given(st.floats(0.0, 0.5), st.floats(0.0, 0.5))
    def test_monotone_along_rays(self, t1, t2):
        g = box((0.5, 0.5), (0.42, 0.45), (0.58, 0.55), (0.3, 0.2), (0.75, 0.7))
        lo, hi = sorted((t1, t2))
        direction = np.array([1.0, -0.6])
        a = membership(g, np.clip(0.5 + lo * direction, 0, 1))
        b = membership(g, np.clip(0.5 + hi * direction, 0, 1))
        assert b <= a


class TestShrink:
    def test_worked_example(self, g_1d):
        p = UpdateParams(0.055, 0.3)
        d = 0.3 - 0.3 * (abs(0.5 - 0.45) / (0.5 - 0.4))
        assert d == pytest.approx(0.15)
        new_il = (1 + d) * 0.4
        out = shrink_on_inner(g_1d, 0.45, p)
        assert out.inner.lower[0] == pytest.approx(new_il) == pytest.approx(0.46)
        assert out.inner.upper[0] == pytest.approx(0.6 - (new_il - 0.4)) == pytest.approx(0.54)
        new_ol = (1 + d) * 0.3
        assert out.outer.lower[0] == pytest.approx(new_ol)
        assert out.outer.upper[0] == pytest.approx(0.7 - (new_ol - 0.3))

    def test_center_hit_is_clamped(self, g_1d):
        p = UpdateParams(0.055, 0.3)
        raw = shrink_raw(g_1d, 0.5, 0.3)
        assert raw.inner.lower[0] == pytest.approx(1.3 * 0.4) == pytest.approx(0.52)
        out = shrink_on_inner(g_1d, 0.5, p)
        assert out.inner.lower[0] == pytest.approx(0.5 - 0.055 / 2) == pytest.approx(0.4725)
        assert out.inner.upper[0] == pytest.approx(0.5275)
        assert check_invariants(out, 0.055) == []

    def test_zero_rate_at_inner_boundary(self, g_1d):
        assert shrink_factors(g_1d, 0.4, 0.3)[0] == 0.0
        raw = shrink_raw(g_1d, 0.4, 0.3)
        for a, b in zip(raw.vectors(), g_1d.vectors()):
            np.testing.assert_array_equal(a, b)

    def test_requires_inner_hit(self, g_1d):
        with pytest.raises(ContractError):
            shrink_on_inner(g_1d, 0.35, UpdateParams(0.05))

    def test_center_unchanged(self, g_1d):
        out = shrink_on_inner(g_1d, 0.45, UpdateParams(0.05))
        assert out.center[0] == 0.5


class TestSlide:
    def test_weighted_step(self):
        g = box(0.5, 0.45, 0.55, 0.4, 0.6, support=4)
        out = slide(g, 0.46)
        assert out.center[0] == pytest.approx(0.5 + (0.46 - 0.5) / 5) == pytest.approx(0.492)
        assert out.support == 4  # incremented by the engine

    def test_no_move_at_center(self, g_1d):
        out = slide(g_1d, 0.5)
        for a, b in zip(out.vectors(), g_1d.vectors()):
            np.testing.assert_array_equal(a, b)

    def test_displacement_shrinks_with_support(self):
        steps = [abs(slide(box(0.5, 0.4, 0.6, 0.3, 0.7, support=n), 0.55).center[0] - 0.5)
                 for n in (1, 2, 5, 50, 5000)]
        assert steps == sorted(steps, reverse=True)
        assert steps[-1] < 1e-5

    @given(st.floats(0.4, 0.6, exclude_min=True, exclude_max=True), st.integers(1, 10_000))
    def test_widths_preserved(self, x, n):
        g = box(0.5, 0.4, 0.6, 0.3, 0.7, support=n)
        out = slide(g, x)
        np.testing.assert_allclose(out.inner.width, g.inner.width, rtol=0, atol=1e-12)
        np.testing.assert_allclose(out.outer.width, g.outer.width, rtol=0, atol=1e-12)


class TestExpand:
    def test_worked_example(self, g_1d):
        f = 0.3 * ((0.4 - 0.35) / (0.4 - 0.3))
        assert f == pytest.approx(0.15)
        out = expand_on_outer(g_1d, 0.35, UpdateParams(0.055, 0.3))
        assert out.inner.lower[0] == pytest.approx((1 - f) * 0.4) == pytest.approx(0.34)
        assert out.inner.upper[0] == pytest.approx(0.66)
        assert out.outer.lower[0] == pytest.approx((1 - f) * 0.3) == pytest.approx(0.255)
        assert out.outer.upper[0] == pytest.approx(0.745)
        assert out.center[0] == 0.5

    def test_zero_rate_on_inner_edge(self, g_1d):
        out = expand_on_outer(g_1d, 0.4, UpdateParams(0.055))
        for a, b in zip(out.vectors(), g_1d.vectors()):
            np.testing.assert_allclose(a, b, rtol=0, atol=0)

    def test_maximal_rate_at_outer_edge(self, g_1d):
        f = expansion_factors(g_1d, 0.7, 0.3)[0]
        assert f == pytest.approx(-0.3)
        raw = expand_raw(g_1d, 0.7, 0.3)
        assert raw.inner.upper[0] == pytest.approx(1.3 * 0.6)
        assert raw.inner.lower[0] == pytest.approx(0.4 - 0.3 * 0.6)

    def test_upper_side(self, g_1d):
        f = -0.3 * ((0.65 - 0.6) / (0.7 - 0.6))
        out = expand_on_outer(g_1d, 0.65, UpdateParams(0.055))
        assert out.inner.upper[0] == pytest.approx((1 - f) * 0.6)
        assert out.inner.lower[0] == pytest.approx(0.4 - ((1 - f) * 0.6 - 0.6))
        assert out.outer.upper[0] == pytest.approx((1 - f) * 0.7)

    def test_only_outside_dims_change(self):
        g = box((0.5, 0.5), (0.4, 0.4), (0.6, 0.6), (0.3, 0.3), (0.7, 0.7))
        out = expand_on_outer(g, (0.35, 0.5), UpdateParams(0.05))
        assert out.inner.lower[1] == 0.4 and out.inner.upper[1] == 0.6
        assert out.inner.lower[0] < 0.4

    def test_requires_outer_only_hit(self, g_1d):
        p = UpdateParams(0.05)
        with pytest.raises(ContractError):
            expand_on_outer(g_1d, 0.5, p)
        with pytest.raises(ContractError):
            expand_on_outer(g_1d, 0.8, p)


class TestWidthsAndClamp:
    def test_fresh_granule(self):
        wi, wo = widths(make_granule((0.3, 0.6), 0.055))
        np.testing.assert_allclose(wi, 0.055, atol=1e-15)
        np.testing.assert_allclose(wo, 0.11, atol=1e-15)

    def test_after_expansion(self, g_1d):
        wi, _ = widths(expand_on_outer(g_1d, 0.35, UpdateParams(0.055)))
        assert wi[0] == pytest.approx(0.66 - 0.34) == pytest.approx(0.32)

    def test_degenerate_clamps_to_floor(self):
        g = clamp(box(0.5, 0.5, 0.5, 0.5, 0.5), 0.05)
        wi, wo = widths(g)
        assert wi[0] == pytest.approx(0.05, abs=1e-15)
        assert wo[0] == pytest.approx(0.10, abs=1e-15)

    def test_crossed_bounds_restored(self):
        g = clamp(box(0.5, 0.52, 0.48, 0.39, 0.61), 0.055)
        assert check_invariants(g, 0.055) == []


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.floats(0.01, 0.2))
def test_updates_keep_invariants(seed, n, eps):
    rng = np.random.default_rng(seed)
    g = random_granule(rng, n, eps)
    p = UpdateParams(eps)
    for _ in range(20):
        x = rng.uniform(0, 1, n)
        if contains_inner(g, x):
            assert contains_outer(g, x)
            d = shrink_factors(g, x, p.beta)
            assert np.all((0 <= d) & (d <= p.beta))
            g = slide(shrink_on_inner(g, x, p), x)
        elif contains_outer(g, x):
            f = expansion_factors(g, x, p.beta)
            assert np.all(np.abs(f) <= p.beta)
            g = expand_on_outer(g, x, p)
            assert membership(g, x) > 0
        assert check_invariants(g, eps) == []
