"""Streaming intensity covariances over 1D slices of frames.

A slice turns a 2D frame into a 1D profile: the azimuthal slice bins the
ring theta0 +- halfwidth over phi, the radial slice bins the wedge
phi0 +- halfwidth over theta.  Each camera pixel is split into
``subsample**2`` sub-pixels; every sub-pixel inside the band is shared
linearly between the two nearest bin centers along the binned coordinate.
Profiles are weight-normalized, so a bin holds the mean intensity of the
pixels feeding it.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import kernels
from .errors import (DomainError, InsufficientDataError, ParameterError, ShapeError,
                     UndefinedWidthError)
from .model import PolarGrid

AZIMUTHAL = "azimuthal"
RADIAL = "radial"

DEFAULT_AZIMUTHAL_HALFWIDTH = 1.1e-3
DEFAULT_RADIAL_HALFWIDTH = 0.08


@dataclass(frozen=True)
class SliceSpec:
    """``center`` is theta0 (azimuthal kind) or phi0 (radial kind).

    For radial slices ``theta_range`` bounds the binned radial interval;
    it defaults to the pixel floor out to the frame edge.
    """

    kind: str
    center: float
    halfwidth: float
    resolution: int
    theta_range: Optional[Tuple[float, float]] = None
    subsample: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (AZIMUTHAL, RADIAL):
            raise ParameterError(f"unknown slice kind {self.kind!r}")
        if self.halfwidth <= 0:
            raise ParameterError("halfwidth must be positive")
        if self.resolution < 8:
            raise ParameterError("resolution must be >= 8")
        if self.subsample is not None and self.subsample < 1:
            raise ParameterError("subsample must be >= 1")

    def bin_centers(self, grid: PolarGrid) -> np.ndarray:
        if self.kind == AZIMUTHAL:
            return 2 * np.pi * np.arange(self.resolution) / self.resolution
        lo, hi = self._range(grid)
        d = (hi - lo) / self.resolution
        return lo + (np.arange(self.resolution) + 0.5) * d

    def _range(self, grid: PolarGrid):
        if self.theta_range is not None:
            return self.theta_range
        return (pixel_floor(grid), frame_radius(grid))


@dataclass(frozen=True)
class SliceWeights:
    """Sparse pixel-to-bin map: profile[b] = norm[b] * sum w * frame[pix]."""

    pix: np.ndarray
    bins: np.ndarray
    wts: np.ndarray
    norm: np.ndarray
    n_bins: int

    def dense(self, n_pixels: int) -> np.ndarray:
        w = np.zeros((n_pixels, self.n_bins))
        np.add.at(w, (self.pix, self.bins), self.wts)
        return w * self.norm

    @property
    def pixels(self) -> np.ndarray:
        return np.unique(self.pix)


def pixel_floor(grid: PolarGrid) -> float:
    """Smallest usable theta: the grid floor or half a pixel, whichever is larger."""
    return max(grid.theta_floor, 0.5 * grid.pitch)


def frame_radius(grid: PolarGrid) -> float:
    """Largest theta whose full ring stays on the frame (to the outer pixel edge)."""
    cx, cy = grid.center
    return min(cx, cy, grid.n_x - 1 - cx, grid.n_y - 1 - cy) * grid.pitch + 0.5 * grid.pitch


def ring_centers(grid: PolarGrid, halfwidth: float = DEFAULT_AZIMUTHAL_HALFWIDTH) -> np.ndarray:
    """Contiguous azimuthal slice centers (spacing = slice width) covering the frame."""
    start = pixel_floor(grid) + 1.01 * halfwidth
    return np.arange(start, frame_radius(grid) - halfwidth + 1e-12, 2 * halfwidth)


def _auto_subsample(grid: PolarGrid, spec: SliceSpec) -> int:
    """Sub-pixel count per axis so that sub-pixels are no wider than a bin."""
    if spec.kind == AZIMUTHAL:
        r_in = max(spec.center - spec.halfwidth, 0.5 * grid.pitch)
        bin_len = r_in * 2 * np.pi / spec.resolution
    else:
        lo, hi = spec._range(grid)
        r_in = max(lo, 0.5 * grid.pitch)
        bin_len = min((hi - lo) / spec.resolution, r_in * spec.halfwidth)
    return int(np.clip(np.ceil(grid.pitch / bin_len), 2, 64))


def slice_weights(grid: PolarGrid, spec: SliceSpec) -> SliceWeights:
    s = spec.subsample or _auto_subsample(grid, spec)
    offs = (np.arange(s) + 0.5) / s - 0.5
    cx, cy = grid.center
    px = np.arange(grid.n_x)
    py = np.arange(grid.n_y)
    # sub-pixel coordinates, shape (n_y, n_x, s, s)
    sx = (px[None, :, None, None] - cx + offs[None, None, None, :]) * grid.pitch
    sy = (py[:, None, None, None] - cy + offs[None, None, :, None]) * grid.pitch
    sx, sy = np.broadcast_arrays(sx, sy)
    theta = np.hypot(sx, sy)
    phi = np.mod(np.arctan2(sy, sx), 2 * np.pi)
    pix_id = np.broadcast_to(
        (py[:, None] * grid.n_x + px[None, :])[:, :, None, None], theta.shape
    )
    floor = pixel_floor(grid)
    r_edge = frame_radius(grid)
    n = spec.resolution
    if spec.kind == AZIMUTHAL:
        lo, hi = spec.center - spec.halfwidth, spec.center + spec.halfwidth
        if lo <= floor:
            raise DomainError("azimuthal slice reaches inside the theta floor")
        if hi > r_edge:
            raise DomainError("azimuthal slice extends beyond the frame")
        inside = (theta >= lo) & (theta < hi)
        t = phi[inside] * n / (2 * np.pi)
        k0 = np.floor(t).astype(np.int64)
        f = t - k0
        b0, b1 = np.mod(k0, n), np.mod(k0 + 1, n)
    else:
        lo, hi = spec._range(grid)
        if lo < floor - 1e-15:
            raise DomainError("radial slice reaches inside the theta floor")
        if hi > r_edge + 1e-15:
            raise DomainError("radial slice extends beyond the frame")
        dphi = np.angle(np.exp(1j * (phi - spec.center)))
        inside = (np.abs(dphi) <= spec.halfwidth) & (theta >= lo) & (theta < hi)
        d = (hi - lo) / n
        t = np.clip((theta[inside] - lo) / d - 0.5, 0.0, n - 1.0)
        k0 = np.minimum(np.floor(t).astype(np.int64), n - 2)
        f = t - k0
        b0, b1 = k0, k0 + 1
    pid = pix_id[inside].astype(np.int64)
    area = 1.0 / (s * s)
    pix = np.concatenate([pid, pid])
    bins = np.concatenate([b0, b1])
    wts = np.concatenate([(1 - f) * area, f * area])
    keep = wts > 0
    pix, bins, wts = pix[keep], bins[keep], wts[keep]
    # merge duplicate (pixel, bin) pairs
    key = pix * n + bins
    uniq, inv = np.unique(key, return_inverse=True)
    wsum = np.bincount(inv, weights=wts)
    pix, bins = uniq // n, uniq % n
    per_bin = np.bincount(bins, weights=wsum, minlength=n)
    if np.any(per_bin <= 0):
        empty = np.flatnonzero(per_bin <= 0)
        raise DomainError(f"slice bins {empty.tolist()} receive no pixels; lower the resolution")
    return SliceWeights(pix, bins, wsum, 1.0 / per_bin, n)


def extract_slice(frame, spec: SliceSpec, weights: Optional[SliceWeights] = None) -> np.ndarray:
    """1D profile of one frame (a Frame or a raw 2D array with ``spec``'s grid)."""
    pixels = frame.pixels if hasattr(frame, "pixels") else np.asarray(frame)
    if weights is None:
        weights = slice_weights(frame.grid, spec)
    flat = np.asarray(pixels, dtype=np.float64).reshape(1, -1)
    prof = kernels.bin_profiles(flat, weights.pix, weights.bins, weights.wts, weights.n_bins)
    return prof[0] * weights.norm


def extract_slices(frames: np.ndarray, weights: SliceWeights) -> np.ndarray:
    flat = np.asarray(frames).reshape(frames.shape[0], -1)
    return kernels.bin_profiles(flat, weights.pix, weights.bins, weights.wts,
                                weights.n_bins) * weights.norm


_CKPT_MAGIC = b"CVAC"
_CKPT_VERSION = 1
_CKPT_HEADER = struct.Struct("<4sHQI")


class CovarianceAccumulator:
    """Mergeable running mean and co-moment of 1D profiles.

    Internally keeps the mean and the centered co-moment matrix rather than
    raw power sums, which avoids cancellation for bright, weakly fluctuating
    data.  ``sum_x`` and ``sum_xx`` are derived views.
    """

    def __init__(self, n_bins: int):
        self.n_bins = int(n_bins)
        self.n = 0
        self.mean = np.zeros(self.n_bins)
        self.comoment = np.zeros((self.n_bins, self.n_bins))

    @property
    def sum_x(self) -> np.ndarray:
        return self.mean * self.n

    @property
    def sum_xx(self) -> np.ndarray:
        return self.comoment + self.n * np.outer(self.mean, self.mean)

    def accumulate(self, profile) -> "CovarianceAccumulator":
        p = np.atleast_2d(np.asarray(profile, dtype=np.float64))
        if p.shape[1] != self.n_bins:
            raise ShapeError(f"profile length {p.shape[1]} != {self.n_bins}")
        self.n = kernels.comoment_update(self.mean, self.comoment, self.n, p)
        return self

    def accumulate_frames(self, frames: np.ndarray, weights: SliceWeights) -> "CovarianceAccumulator":
        """Bin raw frames and accumulate them in one pass."""
        if weights.n_bins != self.n_bins:
            raise ShapeError("slice weights do not match accumulator size")
        flat = np.ascontiguousarray(np.asarray(frames).reshape(len(frames), -1))
        self.n = kernels.binned_comoment_update(
            self.mean, self.comoment, self.n, flat, weights.pix, weights.bins,
            weights.wts, weights.norm)
        return self

    def merge(self, other: "CovarianceAccumulator") -> "CovarianceAccumulator":
        """New accumulator equivalent to having seen both inputs."""
        if other.n_bins != self.n_bins:
            raise ShapeError("cannot merge accumulators of different size")
        out = CovarianceAccumulator(self.n_bins)
        n = self.n + other.n
        out.n = n
        if n == 0:
            return out
        delta = other.mean - self.mean
        out.mean = self.mean + delta * (other.n / n)
        out.comoment = (self.comoment + other.comoment
                        + np.outer(delta, delta) * (self.n * other.n / n))
        return out

    def finalize(self) -> np.ndarray:
        """Unbiased sample covariance matrix."""
        if self.n < 2:
            raise InsufficientDataError(f"need at least 2 profiles, have {self.n}")
        c = self.comoment / (self.n - 1)
        return 0.5 * (c + c.T)

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(_CKPT_HEADER.pack(_CKPT_MAGIC, _CKPT_VERSION, self.n, self.n_bins))
        buf.write(self.mean.astype("<f8").tobytes())
        buf.write(self.comoment.astype("<f8").tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CovarianceAccumulator":
        if len(data) < _CKPT_HEADER.size:
            raise ShapeError("checkpoint truncated")
        magic, version, n, m = _CKPT_HEADER.unpack_from(data)
        if magic != _CKPT_MAGIC:
            raise ShapeError("not an accumulator checkpoint")
        if version != _CKPT_VERSION:
            raise ShapeError(f"unsupported checkpoint version {version}")
        need = _CKPT_HEADER.size + 8 * (m + m * m)
        if len(data) != need:
            raise ShapeError(f"checkpoint size {len(data)} != expected {need}")
        acc = cls(m)
        acc.n = n
        off = _CKPT_HEADER.size
        acc.mean = np.frombuffer(data, "<f8", m, off).astype(np.float64)
        acc.comoment = np.frombuffer(data, "<f8", m * m, off + 8 * m).reshape(m, m).astype(np.float64)
        return acc


def accumulate(acc: CovarianceAccumulator, profile) -> CovarianceAccumulator:
    return acc.accumulate(profile)


def merge(a: CovarianceAccumulator, b: CovarianceAccumulator) -> CovarianceAccumulator:
    return a.merge(b)


def finalize(acc: CovarianceAccumulator) -> np.ndarray:
    return acc.finalize()


def slice_covariance(frames: np.ndarray, weights: SliceWeights, batch: int = 512) -> np.ndarray:
    acc = CovarianceAccumulator(weights.n_bins)
    for start in range(0, len(frames), batch):
        acc.accumulate_frames(frames[start:start + batch], weights)
    return acc.finalize()


@dataclass(frozen=True)
class CovarianceCurve:
    """Anti-diagonally averaged azimuthal covariance.

    ``period`` holds one period sampled at offsets 2 pi k / N, k = 0..N-1;
    ``axis``/``values`` repeat it over (-2 pi, 2 pi).
    """

    period: np.ndarray
    spec: Optional[SliceSpec] = None
    n_frames: int = 0

    @property
    def axis(self) -> np.ndarray:
        n = self.period.size
        return 2 * np.pi * np.arange(-(n - 1), n) / n

    @property
    def values(self) -> np.ndarray:
        n = self.period.size
        return self.period[np.mod(np.arange(-(n - 1), n), n)]

    @property
    def centered(self) -> Tuple[np.ndarray, np.ndarray]:
        """One period on offsets in [-pi, pi), peak in the middle."""
        n = self.period.size
        k = np.arange(n) - n // 2
        return 2 * np.pi * k / n, self.period[np.mod(k, n)]


def antidiagonal_average(cov: np.ndarray, spec: Optional[SliceSpec] = None,
                         n_frames: int = 0) -> CovarianceCurve:
    """Average a periodic phi x phi' matrix along phi + phi'."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {cov.shape}")
    n = cov.shape[0]
    i = np.arange(n)
    period = np.array([cov[i, (i - k) % n].mean() for k in range(n)])
    return CovarianceCurve(period, spec, n_frames)


def azimuthal_transfer(grid: PolarGrid, spec: SliceSpec,
                       weights: Optional[SliceWeights] = None) -> np.ndarray:
    """Per-harmonic response k(m) of an azimuthal slice to point-sampled pixels.

    A pixel field e^{i m phi} (phi at pixel centers) is binned into
    k(m) e^{i m phi_bin} plus aliases; the sub-pixel footprint and the linear
    bin assignment make |k(m)| fall below 1 as m grows.  Entries follow
    ``np.fft.fftfreq`` order.
    """
    if spec.kind != AZIMUTHAL:
        raise ParameterError("transfer is defined for azimuthal slices")
    if weights is None:
        weights = slice_weights(grid, spec)
    n = weights.n_bins
    _, phi = grid.pixel_polar()
    dphi = phi.ravel()[weights.pix] - spec.bin_centers(grid)[weights.bins]
    w = weights.wts * weights.norm[weights.bins]
    m = np.fft.fftfreq(n, 1.0 / n)
    return np.real(np.exp(1j * np.outer(m, dphi)) @ w) / n


def correct_pixel_response(curve: CovarianceCurve, transfer: np.ndarray,
                           floor: float = 0.25) -> CovarianceCurve:
    """Undo the slice's azimuthal smoothing of a covariance curve.

    Harmonic m of the binned covariance is |k(m)|^2 times the pixel-level
    one; division is limited to gains of at most 1/floor.
    """
    spec = np.fft.fft(curve.period) / np.clip(transfer**2, floor, None)
    return CovarianceCurve(np.real(np.fft.ifft(spec)), curve.spec, curve.n_frames)


def fwhm(axis, values, outer_fraction: float = 0.2) -> float:
    """Full width at half of (max - baseline), baseline = median of the outer axis.

    Crossings are found by linear interpolation walking out from the peak.
    """
    x = np.asarray(axis, dtype=float)
    y = np.asarray(values, dtype=float)
    n = y.size
    k_out = max(1, int(round(outer_fraction * n / 2)))
    baseline = np.median(np.concatenate([y[:k_out], y[n - k_out:]]))
    i0 = int(np.argmax(y))
    peak = y[i0]
    if not peak > baseline or np.allclose(y, y[0]):
        raise UndefinedWidthError("curve has no peak above baseline")
    half = baseline + 0.5 * (peak - baseline)

    def crossing(step):
        j = i0
        while 0 <= j + step < n:
            if y[j + step] <= half:
                a, b = y[j], y[j + step]
                return x[j] + (x[j + step] - x[j]) * (a - half) / (a - b)
            j += step
        raise UndefinedWidthError("curve does not fall to half maximum")

    return float(crossing(1) - crossing(-1))


def curve_fwhm(curve: CovarianceCurve) -> float:
    return fwhm(*curve.centered)


@dataclass(frozen=True)
class SiegertResult:
    pixels: np.ndarray
    g2: np.ndarray
    stderr: np.ndarray


def siegert_check(frames: np.ndarray, pixels=None, min_frames: int = 100) -> SiegertResult:
    """Per-pixel normalized second moment <I^2>/<I>^2 with delta-method errors."""
    frames = np.asarray(frames)
    n = frames.shape[0]
    if n < min_frames:
        raise InsufficientDataError(f"need >= {min_frames} frames, have {n}")
    flat = frames.reshape(n, -1).astype(np.float64)
    if pixels is None:
        pixels = np.arange(flat.shape[1])
    pixels = np.asarray(pixels)
    x = flat[:, pixels]
    m1 = x.mean(axis=0)
    keep = m1 > 0
    x, m1, pixels = x[:, keep], m1[keep], pixels[keep]
    m2 = (x**2).mean(axis=0)
    g2 = m2 / m1**2
    # linearized estimator: I^2/m1^2 - 2 (m2/m1^3) I
    lin = x**2 / m1**2 - 2 * m2 / m1**3 * x
    stderr = lin.std(axis=0, ddof=1) / np.sqrt(n)
    return SiegertResult(pixels, g2, stderr)


def block_jackknife(values_fn, frames: np.ndarray, n_blocks: int = 10):
    """Delete-one-block jackknife standard error of ``values_fn(frames)``."""
    n = len(frames)
    edges = np.linspace(0, n, n_blocks + 1).astype(int)
    reps = []
    for b in range(n_blocks):
        idx = np.r_[0:edges[b], edges[b + 1]:n]
        reps.append(np.asarray(values_fn(frames[idx])))
    reps = np.array(reps)
    mean = reps.mean(axis=0)
    return np.sqrt((n_blocks - 1) / n_blocks * np.sum((reps - mean) ** 2, axis=0))
