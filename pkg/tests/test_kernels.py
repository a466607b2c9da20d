import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from su11modes import kernels
from su11modes.model import PolarGrid
from su11modes.stats import AZIMUTHAL, RADIAL, SliceSpec, slice_weights

py = kernels.get_backend("python")
try:
    cy = kernels.get_backend("cython")
except ImportError:
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def test_backend_name():
    assert kernels.BACKEND in ("python", "cython")
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def _weights():
    grid = PolarGrid.from_camera(32, 32, 1e-3, n_theta=32, n_phi=32)
    return grid, [slice_weights(grid, SliceSpec(AZIMUTHAL, 8e-3, 1.1e-3, 48)),
                  slice_weights(grid, SliceSpec(RADIAL, 0.5, 0.1, 24))]


@needs_ext
@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_bin_profiles_agree(dtype, rng):
    grid, sws = _weights()
    frames = rng.random((13, 32 * 32)).astype(dtype)
    for sw in sws:
        a = py.bin_profiles(frames, sw.pix, sw.bins, sw.wts, sw.n_bins)
        b = cy.bin_profiles(frames, sw.pix, sw.bins, sw.wts, sw.n_bins)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


@needs_ext
@given(st.integers(1, 30), st.integers(1, 9), st.integers(0, 30), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_comoment_update_agrees(nb, m, n0, seed):
    r = np.random.default_rng(seed)
    mean0 = r.normal(size=m)
    c0 = r.normal(size=(m, m))
    com0 = c0 @ c0.T
    prof = r.normal(5, 2, (nb, m))
    state = []
    for mod in (py, cy):
        mean, com = mean0.copy(), com0.copy()
        n = mod.comoment_update(mean, com, n0, prof)
        state.append((n, mean, com))
    assert state[0][0] == state[1][0] == n0 + nb
    assert np.allclose(state[0][1], state[1][1], rtol=1e-12, atol=1e-12)
    assert np.allclose(state[0][2], state[1][2], rtol=1e-11, atol=1e-10)


@needs_ext
def test_comoment_does_not_modify_input(rng):
    prof = rng.random((5, 3))
    keep = prof.copy()
    cy.comoment_update(np.zeros(3), np.zeros((3, 3)), 0, prof)
    assert np.array_equal(prof, keep)


@pytest.mark.parametrize("mod", [py] + ([cy] if cy is not None else []))
def test_single_profile_and_empty_batch(mod):
    mean, com = np.zeros(3), np.zeros((3, 3))
    assert mod.comoment_update(mean, com, 0, np.array([1.0, 2.0, 3.0])) == 1
    assert np.allclose(mean, [1, 2, 3]) and np.allclose(com, 0)
    assert mod.comoment_update(mean, com, 1, np.empty((0, 3))) == 1


@needs_ext
def test_binned_update_agrees(rng):
    grid, sws = _weights()
    frames = rng.random((40, 32 * 32)).astype(np.float32)
    for sw in sws:
        out = []
        for mod in (py, cy):
            mean, com = np.zeros(sw.n_bins), np.zeros((sw.n_bins, sw.n_bins))
            n = mod.binned_comoment_update(mean, com, 0, frames, sw.pix, sw.bins, sw.wts, sw.norm)
            out.append((n, mean, com))
        assert out[0][0] == out[1][0] == 40
        assert np.allclose(out[0][1], out[1][1], rtol=1e-12)
        assert np.allclose(out[0][2], out[1][2], rtol=1e-10, atol=1e-14)
