import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from su11modes.errors import AsymmetryError, ParameterError, ShapeError
from su11modes.model import PolarGrid, build_lg_basis, geometric_spectrum
from su11modes.recon import (OamSpectrum, align_spectrum, azimuthal_curves,
                             azimuthal_weights_expected, fourier_weights, mode_count,
                             oam_spectrum_at, oam_spectrum_avg, radial_covariance, radial_modes,
                             total_mode_count)
from su11modes.stats import CovarianceCurve, SliceSpec
from su11modes.su11 import output_spectrum
from su11modes.synth import synthesize


def _curve_from_weights(weights, n=64):
    dphi = 2 * np.pi * np.arange(n) / n
    amp = sum(w * np.exp(1j * l * dphi) for l, w in weights.items())
    return CovarianceCurve(np.abs(amp) ** 2)


class TestFourier:
    def test_cosine(self):
        n = 32
        x = 2 * np.pi * np.arange(n) / n
        w = fourier_weights(1 + 0.5 * np.cos(2 * x))
        assert w[0] == pytest.approx(1.0) and w[2] == pytest.approx(0.25) and w[-2] == pytest.approx(0.25)
        assert -16 not in w and len(w) == 31

    def test_asymmetric_rejected(self):
        x = 2 * np.pi * np.arange(32) / 32
        with pytest.raises(AsymmetryError):
            fourier_weights(1 + np.sin(x))

    @given(st.dictionaries(st.integers(-6, 6), st.floats(0.01, 1.0), min_size=1, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_exact_curve_inverts(self, raw):
        weights = {l: raw[l] for l in raw if l != 0}
        for l in list(weights):
            weights[-l] = weights[l]
        # a dominant l = 0 term keeps G positive, so sqrt(|G|^2) = G
        weights[0] = 1.0 + sum(weights.values())
        rec = oam_spectrum_at(_curve_from_weights(weights)).weights
        for l in range(-10, 11):
            assert rec.get(l, 0.0) == pytest.approx(weights.get(l, 0.0), abs=1e-9)

    def test_average_over_rings(self):
        w1, w2 = {0: 1.0, 1: 0.5, -1: 0.5}, {0: 1.0, 2: 0.3, -2: 0.3}
        th = [1.0, 2.0]
        avg = oam_spectrum_avg([_curve_from_weights(w1), _curve_from_weights(w2)], th)
        # trapezoid with a zero end point: 0.5 * (1*w1 + 2*w2) + 0.5 * 1 * w1
        ref = {l: 1.0 * w1.get(l, 0) + 1.0 * w2.get(l, 0) for l in (-2, -1, 0, 1, 2)}
        for l, v in ref.items():
            assert avg.weights[l] == pytest.approx(v, abs=1e-12)
        with pytest.raises(ParameterError):
            oam_spectrum_avg([_curve_from_weights(w1)], [1.0])
        with pytest.raises(ShapeError):
            oam_spectrum_avg([_curve_from_weights(w1, 32), _curve_from_weights(w1, 64)], th)


class TestSpectrumHelpers:
    def test_normalize_and_fold(self):
        s = OamSpectrum({-1: 1.0, 0: 2.0, 1: 1.0}).normalize()
        assert s.normalized and sum(s.weights.values()) == pytest.approx(1.0)
        assert s.folded() == pytest.approx({0: 0.5, 1: 0.5})
        with pytest.raises(ParameterError):
            OamSpectrum({0: 0.0}).normalize()

    def test_mode_count(self):
        assert mode_count([1, 1, 1, 1]) == pytest.approx(4.0)
        assert mode_count({0: 5.0}) == pytest.approx(1.0)
        assert mode_count(OamSpectrum({0: 1.0, 1: 1.0})) == pytest.approx(2.0)
        with pytest.raises(ParameterError):
            mode_count([0.0, -1.0])

    def test_total_count_and_align(self):
        rep = total_mode_count(8.0, 4.0, {0.01: 5.0})
        assert rep.total == 32.0 and rep.spectrum_sides == "two-sided"
        ls, r, t = align_spectrum(OamSpectrum({0: 2.0, 1: 2.0}), {-1: 1.0, 0: 1.0})
        assert list(ls) == [-1, 0, 1]
        assert np.allclose(r, [0, 0.5, 0.5]) and np.allclose(t, [0.5, 0.5, 0])


@pytest.fixture(scope="module")
def radial_setup():
    grid = PolarGrid(0.0, 0.03, 512)
    basis = build_lg_basis(grid, 8e-3, 0, 3)
    thetas = np.linspace(2e-4, 0.03, 300)
    lam = np.array([1.0, 0.2, 0.04, 0.008])
    u = np.array([basis.transverse(0, p, thetas) for p in range(4)])
    return thetas, lam, u


class TestRadialModes:
    def test_recovers_exact_modes(self, radial_setup):
        thetas, lam, u = radial_setup
        g = np.einsum("p,pi,pj->ij", lam, u, u)
        res = radial_modes(g**2, thetas, 4)
        dth = np.gradient(thetas)
        # the square root returns |G|; tiny negative lobes of G bias the weakest mode
        assert np.allclose(res.normalized_weights[:3], lam[:3] / lam.sum(), rtol=2e-3)
        assert res.normalized_weights[3] == pytest.approx(lam[3] / lam.sum(), rel=0.02)
        gram = (res.shapes * dth) @ res.shapes.T
        assert np.allclose(gram, np.eye(4), atol=1e-8)
        # shapes are u_p * sqrt(theta) normalized over the theta samples
        for p in range(4):
            ref = u[p] * np.sqrt(thetas)
            ref /= np.sqrt(np.sum(ref**2 * dth))
            assert abs(np.sum(ref * res.shapes[p] * dth)) > 0.999
            assert res.shapes[p][np.argmax(np.abs(res.shapes[p]))] > 0

    def test_flat_spectrum_loses_sign(self, radial_setup):
        thetas, _, u = radial_setup
        lam = np.array([1.0, 0.6, 0.3, 0.1])
        g = np.einsum("p,pi,pj->ij", lam, u, u)
        assert g.min() < 0
        res = radial_modes(g**2, thetas, 4)
        err = res.normalized_weights / (lam / lam.sum()) - 1
        assert np.abs(err[0]) < 0.02 and np.abs(err[3]) > 0.1

    def test_validation(self, radial_setup):
        thetas = radial_setup[0]
        with pytest.raises(ShapeError):
            radial_modes(np.ones((3, 4)), thetas[:3])
        bad = np.eye(3)
        bad[0, 1] = 1.0
        with pytest.raises(ShapeError):
            radial_modes(bad, thetas[:3])


def test_expected_azimuthal_weights(op_cfg):
    grid = PolarGrid(0.0, 0.03, 256)
    basis = build_lg_basis(grid, 5e-3, 2, 1)
    out = output_spectrum(op_cfg, geometric_spectrum(0.5, 2, 1))
    w = azimuthal_weights_expected(out, basis, 4e-3)
    assert set(w) == {-2, -1, 0, 1, 2}
    assert w[1] == pytest.approx(w[-1])
    ref = sum(out.weights[(1, p)] * basis.transverse(1, p, 4e-3) ** 2 for p in range(2))
    assert w[1] == pytest.approx(float(ref))


def test_single_oam_source_gives_one_mode(op_cfg):
    grid = PolarGrid.from_camera(48, 48, 1e-3, n_theta=96, n_phi=64)
    basis = build_lg_basis(grid, 7e-3, 0, 3)
    out = output_spectrum(op_cfg, geometric_spectrum(0.5, 0, 3))
    st = synthesize(out, basis, grid, 400, seed=4)
    th, curves = azimuthal_curves(st.frames, grid, resolution=64, workers=2)
    th1, curves1 = azimuthal_curves(st.frames, grid, resolution=64, workers=1)
    assert all(np.array_equal(a.period, b.period) for a, b in zip(curves, curves1))
    avg = oam_spectrum_avg(curves, th).normalize()
    assert avg.weights[0] > 0.97
    assert mode_count(avg) == pytest.approx(1.0, abs=0.06)


def test_radial_covariance_defaults(op_cfg):
    grid = PolarGrid.from_camera(32, 32, 1e-3, n_theta=64, n_phi=64)
    basis = build_lg_basis(grid, 5e-3, 0, 1)
    out = output_spectrum(op_cfg, geometric_spectrum(0.5, 0, 1))
    st = synthesize(out, basis, grid, 50, seed=1)
    th, cov = radial_covariance(st.frames, grid, resolution=16)
    assert th.size == 16 and cov.shape == (16, 16)
    assert th[0] > 0.5e-3 and th[-1] < 16e-3
    assert np.allclose(cov, cov.T)
