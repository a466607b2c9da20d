"""Mode spectra, radial mode shapes and mode counts from intensity covariances."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from .errors import AsymmetryError, ParameterError, ShapeError
from .stats import (AZIMUTHAL, DEFAULT_AZIMUTHAL_HALFWIDTH, DEFAULT_RADIAL_HALFWIDTH, RADIAL,
                    CovarianceAccumulator, CovarianceCurve, SliceSpec, antidiagonal_average,
                    azimuthal_transfer, correct_pixel_response, frame_radius, pixel_floor,
                    ring_centers, slice_weights)

RADIALLY_AVERAGED = "radially averaged"


@dataclass(frozen=True)
class OamSpectrum:
    weights: Mapping[int, float]
    context: object = None
    normalized: bool = False

    def as_array(self):
        ls = np.array(sorted(self.weights))
        return ls, np.array([self.weights[l] for l in ls])

    def normalize(self) -> "OamSpectrum":
        total = sum(self.weights.values())
        if total <= 0:
            raise ParameterError("spectrum has no positive weight")
        return OamSpectrum({l: v / total for l, v in self.weights.items()},
                           self.context, True)

    def folded(self) -> Dict[int, float]:
        """Weights of |l|, adding the +l and -l entries."""
        out: Dict[int, float] = {}
        for l, v in self.weights.items():
            out[abs(l)] = out.get(abs(l), 0.0) + v
        return dict(sorted(out.items()))


@dataclass(frozen=True)
class RadialModeSet:
    """Radial shapes u_p(theta) on ``thetas`` (rows), weights descending.

    Shapes are normalized so that sum u_p**2 * dtheta == 1; the sign is
    fixed by making each shape's largest-magnitude sample positive.
    """

    thetas: np.ndarray
    shapes: np.ndarray
    weights: np.ndarray
    sign_convention: str = "positive-peak"

    @property
    def normalized_weights(self) -> np.ndarray:
        return self.weights / self.weights.sum()


@dataclass(frozen=True)
class ModeCountReport:
    azimuthal_count: Mapping[float, float]
    azimuthal_count_avg: float
    radial_count: float
    total: float
    spectrum_sides: str = "two-sided"
    extras: dict = field(default_factory=dict)


def _sqrt_clamped(x):
    return np.sqrt(np.clip(x, 0.0, None))


def fourier_weights(period: np.ndarray, imag_tol: float = 0.01) -> Dict[int, float]:
    """Circular Fourier coefficients c_l with f(dphi) = sum_l c_l e^{i l dphi}."""
    n = period.size
    coef = np.fft.fft(period) / n
    if np.linalg.norm(coef.imag) > imag_tol * max(np.linalg.norm(coef.real), 1e-300):
        raise AsymmetryError("covariance is not even in dphi; imaginary Fourier part too large")
    ls = np.fft.fftfreq(n, 1.0 / n).astype(int)
    out = {}
    for l, c in zip(ls, coef.real):
        if n % 2 == 0 and l == -n // 2:
            continue  # Nyquist term has no partner of opposite sign
        out[int(l)] = max(float(c), 0.0)
    return dict(sorted(out.items()))


def oam_spectrum_at(curve: CovarianceCurve, theta0: Optional[float] = None) -> OamSpectrum:
    """Weights L_l(theta0): Fourier decomposition of the square-rooted covariance."""
    if theta0 is None and curve.spec is not None:
        theta0 = curve.spec.center
    return OamSpectrum(fourier_weights(_sqrt_clamped(curve.period)), theta0, False)


def oam_spectrum_avg(curves: Sequence[CovarianceCurve], theta0s: Sequence[float]) -> OamSpectrum:
    """Radially averaged OAM weights Lambda_l, up to a common positive scale.

    The square-rooted curves are integrated over theta0 with weight theta0
    by the trapezoidal rule before the Fourier decomposition.  The integrand
    vanishes at theta0 = 0, which is added as an end point when missing.
    """
    if len(curves) != len(theta0s) or len(curves) < 2:
        raise ParameterError("need matching curves and theta0 values (at least 2)")
    theta0s = np.asarray(theta0s, dtype=float)
    order = np.argsort(theta0s)
    roots = [_sqrt_clamped(curves[i].period) for i in order]
    if len({r.size for r in roots}) != 1:
        raise ShapeError("curves must share the azimuthal resolution")
    roots = np.array(roots)
    th = theta0s[order]
    if th[0] > 0:
        th = np.r_[0.0, th]
        roots = np.vstack([np.zeros(roots.shape[1]), roots])
    integrand = roots * th[:, None]
    integral = np.trapezoid(integrand, th, axis=0) if hasattr(np, "trapezoid") else np.trapz(integrand, th, axis=0)
    return OamSpectrum(fourier_weights(integral), RADIALLY_AVERAGED, False)


def azimuthal_curves(frames: np.ndarray, grid, theta0s: Optional[Sequence[float]] = None,
                     halfwidth: float = DEFAULT_AZIMUTHAL_HALFWIDTH, resolution: int = 128,
                     correct_pixels: bool = True, batch: int = 500, workers: int = 1):
    """Anti-diagonally averaged covariance curves for a set of ring slices.

    Returns (theta0s, curves).  By default the rings tile the frame from the
    theta floor to its edge, and each curve is corrected for the azimuthal
    smoothing of its slice (see ``stats.correct_pixel_response``).  Slices
    are independent, so ``workers > 1`` processes them on a thread pool
    without changing the result.
    """
    theta0s = ring_centers(grid, halfwidth) if theta0s is None else np.asarray(theta0s, float)
    flat = np.asarray(frames).reshape(len(frames), -1)

    def one(t):
        spec = SliceSpec(AZIMUTHAL, float(t), halfwidth, resolution)
        sw = slice_weights(grid, spec)
        acc = CovarianceAccumulator(resolution)
        for start in range(0, len(flat), batch):
            acc.accumulate_frames(flat[start:start + batch], sw)
        curve = antidiagonal_average(acc.finalize(), spec, acc.n)
        if correct_pixels:
            curve = correct_pixel_response(curve, azimuthal_transfer(grid, spec, sw))
        return curve

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            curves = list(pool.map(one, theta0s))
    else:
        curves = [one(t) for t in theta0s]
    return theta0s, curves


def radial_covariance(frames: np.ndarray, grid, phi0: float = 0.0,
                      halfwidth: float = DEFAULT_RADIAL_HALFWIDTH, resolution: int = 64,
                      theta_range=None, batch: int = 500):
    """theta x theta' covariance of a radial wedge; returns (bin centers, matrix).

    The binned range defaults to the pixel floor out to the frame edge.
    """
    if theta_range is None:
        theta_range = (pixel_floor(grid), frame_radius(grid))
    spec = SliceSpec(RADIAL, phi0, halfwidth, resolution, theta_range=tuple(theta_range))
    sw = slice_weights(grid, spec)
    flat = np.asarray(frames).reshape(len(frames), -1)
    acc = CovarianceAccumulator(resolution)
    for start in range(0, len(flat), batch):
        acc.accumulate_frames(flat[start:start + batch], sw)
    return spec.bin_centers(grid), acc.finalize()


def radial_modes(cov: np.ndarray, thetas: np.ndarray, n_modes: Optional[int] = None,
                 sym_tol: float = 1e-6) -> RadialModeSet:
    """Radial Schmidt modes from the theta x theta' covariance of mean-intensity bins.

    With bins holding intensity densities, sqrt(Cov) equals
    sum_p Lambda_p u_p(theta) u_p(theta') / sqrt(theta theta'); weighting
    both sides by sqrt(theta dtheta) makes it a symmetric operator whose
    eigenvectors are the sampled u_p.
    """
    cov = np.asarray(cov, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] != thetas.size:
        raise ShapeError("covariance must be square and match the theta bins")
    scale = np.max(np.abs(cov))
    if scale > 0 and np.max(np.abs(cov - cov.T)) > sym_tol * scale:
        raise ShapeError("covariance matrix is not symmetric")
    root = _sqrt_clamped(0.5 * (cov + cov.T))
    dth = np.gradient(thetas) if thetas.size > 1 else np.ones(1)
    w = np.sqrt(thetas * dth)
    op = w[:, None] * root * w[None, :]
    evals, evecs = np.linalg.eigh(0.5 * (op + op.T))
    order = np.argsort(evals)[::-1]
    evals, evecs = np.clip(evals[order], 0.0, None), evecs[:, order]
    if n_modes is not None:
        evals, evecs = evals[:n_modes], evecs[:, :n_modes]
    shapes = (evecs / np.sqrt(dth)[:, None]).T
    for k in range(shapes.shape[0]):
        if shapes[k, np.argmax(np.abs(shapes[k]))] < 0:
            shapes[k] = -shapes[k]
    return RadialModeSet(thetas, shapes, evals)


def mode_count(weights) -> float:
    """Participation ratio 1 / sum(w_normalized**2)."""
    if isinstance(weights, Mapping):
        w = np.array(list(weights.values()), dtype=float)
    elif hasattr(weights, "weights") and isinstance(weights.weights, Mapping):
        w = np.array(list(weights.weights.values()), dtype=float)
    else:
        w = np.asarray(weights, dtype=float).ravel()
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if not total > 0:
        raise ParameterError("mode count undefined: no positive weight")
    wn = w / total
    return float(1.0 / np.sum(wn**2))


def total_mode_count(azimuthal_count_avg: float, radial_count: float,
                     azimuthal_count: Optional[Mapping[float, float]] = None) -> ModeCountReport:
    return ModeCountReport(dict(azimuthal_count or {}), float(azimuthal_count_avg),
                           float(radial_count), float(azimuthal_count_avg * radial_count))


def azimuthal_weights_expected(output, basis, theta0: float) -> Dict[int, float]:
    """Analytic L_l(theta0) = sum_p Lambda_lp |u_lp(theta0)|^2 / theta0."""
    out: Dict[int, float] = {}
    for (l, p), big in output.weights.items():
        out[l] = out.get(l, 0.0) + big * float(basis.transverse(l, p, theta0)) ** 2
    return dict(sorted(out.items()))


def align_spectrum(rec: OamSpectrum, truth: Mapping[int, float]):
    """Normalized reconstructed and true weights on the union of l values."""
    ls = sorted(set(rec.weights) | set(truth))
    r = np.array([rec.weights.get(l, 0.0) for l in ls])
    t = np.array([truth.get(l, 0.0) for l in ls])
    return np.array(ls), r / r.sum(), t / t.sum()
