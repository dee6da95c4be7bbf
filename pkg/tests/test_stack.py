import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from planar_antenna.errors import InvalidPlaneWaveError, StackValidationError
from planar_antenna.stack import (
    HalfSpace,
    Layer,
    LayerStack,
    check_stack,
    effective_reflection,
    fresnel_p,
    homogeneous_stack,
    kz,
    kz_at_angle,
    three_layer_stack,
    plane_wave_state,
    validate_stack,
)

K0 = 2 * math.pi / 580.0
index = st.floats(1.0, 2.5)


def test_kz_normal_incidence():
    assert K0 == pytest.approx(0.010833, abs=5e-7)
    value = kz(1.5, 0.0, K0)
    assert value.imag == 0.0
    assert value.real == pytest.approx(0.016249, abs=1e-6)  # quoted to 5 digits
    assert value.real == pytest.approx(1.5 * K0, rel=1e-15)


def test_kz_evanescent_branch():
    value = kz(1.0, 1.2 * K0, K0)
    assert value.real == 0.0
    assert value.imag > 0


def test_kz_oblique_matches_direct_arithmetic():
    value = kz(1.78, 1.5 * K0, K0)
    assert value.imag == 0.0
    assert value.real / K0 == pytest.approx(math.sqrt(1.78**2 - 1.5**2), rel=1e-13)


@given(n=index, frac=st.floats(0.0, 3.0))
def test_kz_branch_and_dispersion(n, frac):
    kp = frac * K0
    value = kz(n, kp, K0)
    assert value.imag >= 0
    if value.imag == 0:
        assert value.real >= 0
    assert abs(value**2 + kp**2 - (K0 * n) ** 2) <= 1e-12 * max((K0 * n) ** 2, kp**2)


def test_kz_dense_grid_branch():
    kp = np.linspace(0, 4 * K0, 20001)
    for n in (1.0, 1.5, 1.78, 2.5):
        v = kz(n, kp, K0)
        assert np.all(v.imag >= 0)
        assert np.all(v.real[v.imag == 0] >= 0)


@given(n=index, n_ref=index, theta=st.floats(0.0, 1.5))
def test_kz_at_angle_matches_kz(n, n_ref, theta):
    a = kz_at_angle(n, n_ref, math.cos(theta), K0)
    b = kz(n, K0 * n_ref * math.sin(theta), K0)
    assert abs(a - b) <= 1e-9 * K0 * max(n, n_ref)
    assert a.imag >= 0


def test_kz_at_angle_keeps_precision_at_grazing():
    c = math.cos(math.pi / 2 - 4.6e-5)
    assert kz_at_angle(1.5, 1.5, c, K0) == pytest.approx(1.5 * K0 * c, rel=1e-15)


def test_plane_wave_state_covers_every_region(stack350):
    state = plane_wave_state(stack350, 1.2 * K0)
    assert len(state.kz_per_region) == 3
    assert state.kz_per_region[-1].real == 0  # air is evanescent


def test_fresnel_no_interface():
    k = kz(1.5, 0.3 * K0, K0)
    r, t = fresnel_p(1.5, 1.5, k, k)
    assert r == 0
    assert t == 1


def test_fresnel_normal_incidence():
    r, _ = fresnel_p(1.5, 1.78, kz(1.5, 0, K0), kz(1.78, 0, K0))
    assert abs(r) == pytest.approx((1.78 - 1.5) / (1.78 + 1.5), rel=1e-12)
    assert abs(r) == pytest.approx(0.08537, abs=5e-6)


def test_fresnel_total_internal_reflection():
    kp = 1.0 * K0 * (1 + 1e-9)
    r, _ = fresnel_p(1.5, 1.0, kz(1.5, kp, K0), kz(1.0, kp, K0))
    assert abs(r) == pytest.approx(1.0, abs=1e-12)


def test_fresnel_degenerate_denominator():
    with pytest.raises(InvalidPlaneWaveError):
        fresnel_p(1.5, 1.5, 0j, 0j)


@given(ni=index, nj=index, frac=st.floats(0.0, 0.999))
def test_interface_energy_conservation(ni, nj, frac):
    kp = frac * min(ni, nj) * K0
    ki, kj = kz(ni, kp, K0), kz(nj, kp, K0)
    r, t = fresnel_p(ni, nj, ki, kj)
    flux = (kj * ni**2 / (ki * nj**2)).real * abs(t) ** 2
    assert abs(r) ** 2 + flux == pytest.approx(1.0, abs=1e-10)


def test_homogeneous_stack_has_no_reflection():
    s = homogeneous_stack(1.5)
    kp = np.linspace(0, 3 * K0, 50)
    assert np.all(effective_reflection(s, "up", kp) == 0)
    assert np.all(effective_reflection(s, "down", kp) == 0)


def test_recursion_base_case(stack350):
    kp = np.array([0.0, 0.5 * K0, 1.2 * K0, 1.6 * K0])
    r_direct, _ = fresnel_p(1.5, 1.78, kz(1.5, kp, K0), kz(1.78, kp, K0))
    # referenced to the emitter plane, 200 nm above the interface
    phase = np.exp(2j * kz(1.5, kp, K0) * 200.0)
    r_eff = effective_reflection(stack350, "down", kp)
    np.testing.assert_allclose(r_eff, r_direct * phase, rtol=1e-13, atol=1e-15)


def test_recursion_against_transfer_matrix():
    """Three-layer upper side checked against an explicit 2x2 field matching."""
    s = LayerStack(
        HalfSpace(1.78),
        (Layer(120.0, 1.5), Layer(80.0, 2.1), Layer(60.0, 1.3)),
        HalfSpace(1.0), 0, 50.0,
    )
    kp = np.linspace(0.01, 1.45, 37) * K0
    got = effective_reflection(s, "up", kp)
    ns = [1.5, 2.1, 1.3, 1.0]
    ds = [80.0, 60.0]
    for m, q in enumerate(kp):
        ks = [kz(n, q, K0) for n in ns]
        # H = a e^{ikz z} + b e^{-ikz z} per region, z local to each region's
        # bottom; (1/eps) dH/dz continuity.  Start above with pure outgoing.
        a, b = 1.0 + 0j, 0.0 + 0j
        for j in range(len(ns) - 1, 0, -1):
            # fields at the bottom of region j (z = 0 there)
            H = a + b
            E = ks[j] / ns[j] ** 2 * (a - b)
            kk = ks[j - 1] / ns[j - 1] ** 2
            ap, bp = (H + E / kk) / 2, (H - E / kk) / 2
            d = ds[j - 2] if j >= 2 else 0.0
            # move from top of region j-1 to its bottom
            a, b = ap * np.exp(-1j * ks[j - 1] * d), bp * np.exp(1j * ks[j - 1] * d)
        # now region 0 (emitter layer); referenced at its top boundary
        top_gap = 120.0 - 50.0
        expected = b / a * np.exp(2j * ks[0] * top_gap)
        assert got[m] == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_three_layer_stack_total_reflection_upward(stack350):
    r = effective_reflection(stack350, "up", 1.2 * K0)
    assert abs(r) == pytest.approx(1.0, abs=1e-9)


layer_st = st.builds(Layer, st.floats(20.0, 1000.0), index)


@settings(max_examples=60, deadline=None)
@given(
    layers=st.lists(layer_st, min_size=1, max_size=4),
    n_sub=index, n_sup=index, pick=st.integers(0, 3), frac=st.floats(0.05, 0.95),
    q=st.floats(0.0, 3.0),
)
def test_reversal_reciprocity(layers, n_sub, n_sup, pick, frac, q):
    e = pick % len(layers)
    s = LayerStack(HalfSpace(n_sub), tuple(layers), HalfSpace(n_sup), e,
                   frac * layers[e].thickness)
    # grazing incidence (kz = 0) in any region has no defined Fresnel coefficient
    assume(all(abs(q - n) > 1e-6 for n in s.indices))
    rev = s.reversed()
    kp = q * K0
    for a, b in (("up", "down"), ("down", "up")):
        x = effective_reflection(s, a, kp)
        y = effective_reflection(rev, b, kp)
        assert abs(abs(x) - abs(y)) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(
    layers=st.lists(layer_st, min_size=1, max_size=4),
    n_sub=index, n_sup=index, pick=st.integers(0, 3), frac=st.floats(0.05, 0.95),
    side=st.sampled_from(["up", "down"]), where=st.floats(0.001, 0.999),
)
def test_unimodularity_beyond_outer_critical(layers, n_sub, n_sup, pick, frac, side, where):
    e = pick % len(layers)
    s = LayerStack(HalfSpace(n_sub), tuple(layers), HalfSpace(n_sup), e,
                   frac * layers[e].thickness)
    n_outer = n_sup if side == "up" else n_sub
    n_e = layers[e].index
    if n_e <= n_outer * 1.001:
        return
    # propagating at the emitter, evanescent in the outer half-space
    kp = K0 * (n_outer + where * (n_e - n_outer))
    assert abs(effective_reflection(s, side, kp)) == pytest.approx(1.0, abs=1e-9)


def test_validate_default_structure():
    assert validate_stack(three_layer_stack(350, 200)) == []


def test_validate_emitter_outside_layer():
    problems = validate_stack(three_layer_stack(350, 400))
    assert any("emitter outside its layer" in p for p in problems)


def test_validate_zero_thickness():
    s = LayerStack(HalfSpace(1.78), (Layer(0.0, 1.5),), HalfSpace(1.0), 0, 0.0)
    problems = validate_stack(s)
    assert any("non-positive thickness" in p for p in problems)
    with pytest.raises(StackValidationError):
        check_stack(s)


def test_validate_rejects_complex_and_low_index():
    s = LayerStack(HalfSpace(1.5 + 0.1j), (Layer(100.0, 0.9),), HalfSpace(1.0), 0, 50.0)
    problems = validate_stack(s)
    assert any("complex" in p for p in problems)
    assert any("below 1" in p for p in problems)


def test_film_variant_places_emitter_in_film():
    s = three_layer_stack(350, 200, film_thickness=20, film_index=1.7)
    assert [l.thickness for l in s.layers] == [190.0, 20.0, 140.0]
    assert s.emitter_layer == 1 and s.emitter_height == 10.0
    assert s.emitter_index == 1.7
