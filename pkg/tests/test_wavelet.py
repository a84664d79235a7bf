import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from restore.errors import ParameterError, ShapeError
from restore.wavelet import DB4, HAAR, dwt2, dwt2_multi, get_family, idwt2, idwt2_multi

FAMILIES = ["haar", "db4"]


def test_haar_2x2_constant():
    sb = dwt2(np.full((2, 2), 5.0), "haar")
    assert sb.ca[0, 0] == pytest.approx(10.0, abs=1e-14)
    assert sb.chd[0, 0] == sb.cvd[0, 0] == sb.cdd[0, 0] == 0.0


@pytest.mark.parametrize("family", FAMILIES)
def test_constant_has_no_detail(family):
    sb = dwt2(np.full((16, 8), -3.5), family)
    for d in sb.details():
        assert np.max(np.abs(d)) < 1e-12


@pytest.mark.parametrize("family", FAMILIES)
def test_subband_shapes(family):
    sb = dwt2(np.zeros((12, 20)), family)
    assert {b.shape for b in (sb.ca, sb.chd, sb.cvd, sb.cdd)} == {(6, 10)}


@pytest.mark.parametrize("family", FAMILIES)
def test_parseval(family, rng):
    x = rng.normal(size=(32, 32)) * 40
    sb = dwt2(x, family)
    energy = sum(np.sum(b ** 2) for b in (sb.ca, sb.chd, sb.cvd, sb.cdd))
    assert energy == pytest.approx(np.sum(x ** 2), rel=1e-9)


@pytest.mark.parametrize("family", FAMILIES)
def test_round_trip_64(family, rng):
    x = rng.uniform(0, 255, size=(64, 64))
    assert np.max(np.abs(idwt2(dwt2(x, family)) - x)) <= 1e-9


def test_zero_subbands():
    z = np.zeros((4, 4))
    sb = dwt2(np.ones((8, 8)))
    sb = sb.replace(ca=z, chd=z, cvd=z, cdd=z)
    np.testing.assert_array_equal(idwt2(sb), np.zeros((8, 8)))


@pytest.mark.parametrize("family", FAMILIES)
def test_linearity(family, rng):
    x, y = rng.normal(size=(2, 16, 16))
    a, b = 2.5, -0.75
    lhs = dwt2(a * x + b * y, family)
    sx, sy = dwt2(x, family), dwt2(y, family)
    for name in ("ca", "chd", "cvd", "cdd"):
        np.testing.assert_allclose(getattr(lhs, name), a * getattr(sx, name) + b * getattr(sy, name),
                                   atol=1e-9, rtol=0)


@pytest.mark.parametrize("family", FAMILIES)
def test_matches_pywavelets(family, rng):
    pywt = pytest.importorskip("pywt")
    x = rng.normal(size=(16, 24))
    sb = dwt2(x, family)
    cA, (cH, cV, cD) = pywt.dwt2(x, family, mode="periodization")
    for mine, ref in ((sb.ca, cA), (sb.chd, cH), (sb.cvd, cV), (sb.cdd, cD)):
        np.testing.assert_allclose(mine, ref, atol=1e-12, rtol=0)


def test_db4_filter_is_orthonormal():
    h = DB4.lo
    assert np.sum(h) == pytest.approx(np.sqrt(2.0), abs=1e-12)
    assert np.sum(h ** 2) == pytest.approx(1.0, abs=1e-12)
    for s in (2, 4, 6):
        assert np.dot(h[s:], h[:-s]) == pytest.approx(0.0, abs=1e-12)


def test_horizontal_edge_lands_in_chd():
    x = np.zeros((16, 16))
    x[7:, :] = 1.0  # edge between rows 6 and 7, inside a Haar pair
    sb = dwt2(x, "haar")
    assert np.max(np.abs(sb.chd)) > 0.5
    assert np.max(np.abs(sb.cvd)) < 1e-12


def test_odd_dims():
    with pytest.raises(ShapeError):
        dwt2(np.zeros((5, 4)))


def test_mismatched_subbands():
    sb = dwt2(np.zeros((8, 8)))
    with pytest.raises(ShapeError):
        idwt2(sb.replace(cdd=np.zeros((3, 4))))


def test_unknown_family():
    with pytest.raises(ParameterError):
        get_family("sym5")
    assert get_family("HAAR") is HAAR


@pytest.mark.parametrize("family", FAMILIES)
def test_multi_level_one_equals_single(family, rng):
    x = rng.normal(size=(16, 16))
    (sb,) = dwt2_multi(x, family, 1)
    ref = dwt2(x, family)
    np.testing.assert_array_equal(sb.ca, ref.ca)
    np.testing.assert_array_equal(sb.cdd, ref.cdd)


def test_multi_level_depth(rng):
    bands = dwt2_multi(rng.normal(size=(64, 64)), "haar", 2)
    assert bands[-1].ca.shape == (16, 16)
    assert [b.level for b in bands] == [1, 2]


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("levels", [1, 2, 3])
def test_multi_level_round_trip(family, levels, rng):
    x = rng.uniform(0, 255, size=(64, 64))
    assert np.max(np.abs(idwt2_multi(dwt2_multi(x, family, levels)) - x)) <= 1e-9


def test_multi_level_indivisible():
    with pytest.raises(ShapeError):
        dwt2_multi(np.zeros((12, 12)), "haar", 3)


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(FAMILIES),
    st.integers(1, 12).flatmap(lambda r: st.integers(1, 12).flatmap(
        lambda c: arrays(np.float64, (2 * r, 2 * c), elements=st.floats(-1e3, 1e3)))),
)
def test_perfect_reconstruction_property(family, x):
    assert np.max(np.abs(idwt2(dwt2(x, family)) - x)) <= 1e-9
