"""Single-shot intensity frames with prescribed per-mode thermal statistics.

Each frame draws one unit-variance circular complex Gaussian amplitude per
Schmidt mode.  Randomness is keyed by (seed, stream, frame index) through a
Philox counter, so frame ``k`` is the same whatever order or batch it is
generated in.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ParameterError
from .model import OUTPUT_LAMBDA, ModeBasis, PolarGrid, SchmidtSpectrum

_STREAM_FIELD = 0
_STREAM_NOISE = 1
_MASK64 = (1 << 64) - 1


def frame_rng(seed: int, index: int, stream: int = _STREAM_FIELD) -> np.random.Generator:
    bg = np.random.Philox(key=[seed & _MASK64, stream], counter=[0, 0, index, 0])
    return np.random.Generator(bg)


@dataclass(frozen=True)
class Frame:
    pixels: np.ndarray
    grid: PolarGrid

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.shape != (self.grid.n_y, self.grid.n_x):
            raise ParameterError(f"frame shape {px.shape} does not match grid")
        if np.any(px < 0):
            raise ParameterError("negative intensity in frame")


@dataclass
class FrameStack:
    """Frames of shape (n, n_y, n_x) on one camera grid."""

    frames: np.ndarray
    grid: PolarGrid
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.frames.ndim != 3 or self.frames.shape[0] < 1:
            raise ParameterError("a stack needs at least one 2D frame")
        if self.frames.shape[1:] != (self.grid.n_y, self.grid.n_x):
            raise ParameterError("frame dimensions do not match the grid")

    def __len__(self):
        return self.frames.shape[0]

    def __getitem__(self, i) -> Frame:
        return Frame(self.frames[i], self.grid)


@dataclass(frozen=True)
class NoiseModel:
    electronic_sigma: float = 0.0
    background: float = 0.0
    enabled: bool = True

    def __post_init__(self):
        if self.electronic_sigma < 0 or self.background < 0:
            raise ParameterError("noise parameters must be nonnegative")


def mode_matrix(output: SchmidtSpectrum, basis: ModeBasis, grid: PolarGrid,
                pixels: Optional[np.ndarray] = None, idler: bool = False):
    """Mode fields sqrt(Lambda) u/sqrt(theta) e^{il phi} on pixel centers.

    Returns (modes, matrix) with matrix of shape (n_modes, n_pixels); only
    modes with positive weight are kept.  ``idler`` gives the partner beam,
    e^{-il phi} evaluated at the antipodal direction.
    """
    if output.kind != OUTPUT_LAMBDA:
        raise ParameterError("frame synthesis needs an output-Lambda spectrum")
    theta, phi = grid.pixel_polar()
    theta, phi = theta.ravel(), phi.ravel()
    if pixels is not None:
        theta, phi = theta[pixels], phi[pixels]
    modes = [m for m, v in output.weights.items() if v > 0]
    missing = [m for m in modes if not basis.covers(m)]
    if missing:
        raise ConfigurationError(f"modes with weight > 0 missing from basis: {missing}")
    rows = np.empty((len(modes), theta.size), dtype=np.complex128)
    radial_cache = {}
    for i, (l, p) in enumerate(modes):
        key = (abs(l), p)
        if key not in radial_cache:
            radial_cache[key] = basis.transverse(l, p, theta)
        ang = -l * (phi + np.pi) if idler else l * phi
        rows[i] = np.sqrt(output.weights[(l, p)]) * radial_cache[key] * np.exp(1j * ang)
    return modes, rows


class Sampler:
    """Precomputed mode fields for repeated frame synthesis."""

    def __init__(self, output: SchmidtSpectrum, basis: ModeBasis, grid: PolarGrid,
                 twin: bool = False, temporal_modes: int = 1):
        if temporal_modes < 1:
            raise ParameterError("temporal_modes must be >= 1")
        self.grid = grid
        self.twin = twin
        self.temporal_modes = temporal_modes
        self.modes, self.signal = mode_matrix(output, basis, grid)
        self.idler = mode_matrix(output, basis, grid, idler=True)[1] if twin else None

    def amplitudes(self, seed: int, index: int) -> np.ndarray:
        rng = frame_rng(seed, index)
        z = rng.standard_normal((self.temporal_modes, len(self.modes), 2))
        return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)

    def frames(self, seed: int, start: int, count: int) -> np.ndarray:
        """Frames start..start+count-1 as float32, shape (count, n_y, n_x)."""
        c = np.stack([self.amplitudes(seed, start + k) for k in range(count)])
        m = self.temporal_modes
        c = c.reshape(count * m, -1)
        inten = np.abs(c @ self.signal) ** 2
        if self.twin:
            # signal and idler sit at different frequencies; intensities add
            inten += np.abs(np.conj(c) @ self.idler) ** 2
        inten = inten.reshape(count, m, -1).mean(axis=1)
        return inten.reshape(count, self.grid.n_y, self.grid.n_x).astype(np.float32)


def sample_signal_frame(output: SchmidtSpectrum, basis: ModeBasis, grid: PolarGrid,
                        seed: int, index: int = 0) -> Frame:
    return Frame(Sampler(output, basis, grid).frames(seed, index, 1)[0], grid)


def sample_twin_frame(output: SchmidtSpectrum, basis: ModeBasis, grid: PolarGrid,
                      seed: int, index: int = 0) -> Frame:
    return Frame(Sampler(output, basis, grid, twin=True).frames(seed, index, 1)[0], grid)


def add_noise(frame: Frame, noise: NoiseModel, seed: int, index: int = 0) -> Frame:
    """Background offset plus Gaussian read noise, clamped at zero."""
    if not noise.enabled:
        return frame
    px = frame.pixels.astype(np.float64) + noise.background
    if noise.electronic_sigma > 0:
        rng = frame_rng(seed, index, _STREAM_NOISE)
        px = px + rng.normal(0.0, noise.electronic_sigma, px.shape)
    return Frame(np.clip(px, 0, None).astype(np.float32), frame.grid)


def synthesize(output: SchmidtSpectrum, basis: ModeBasis, grid: PolarGrid, n_frames: int,
               seed: int, twin: bool = False, noise: Optional[NoiseModel] = None,
               temporal_modes: int = 1, batch: int = 256) -> FrameStack:
    """Generate a deterministic stack of ``n_frames`` frames."""
    if n_frames < 1:
        raise ParameterError("n_frames must be positive")
    sampler = Sampler(output, basis, grid, twin=twin, temporal_modes=temporal_modes)
    out = np.empty((n_frames, grid.n_y, grid.n_x), dtype=np.float32)
    for start in range(0, n_frames, batch):
        count = min(batch, n_frames - start)
        out[start:start + count] = sampler.frames(seed, start, count)
    if noise is not None and noise.enabled:
        for k in range(n_frames):
            out[k] = add_noise(Frame(out[k], grid), noise, seed, k).pixels
    meta = {"seed": seed, "n_frames": n_frames, "twin": twin,
            "temporal_modes": temporal_modes}
    return FrameStack(out, grid, meta)


def expected_intensity(output: SchmidtSpectrum, basis: ModeBasis, grid: PolarGrid) -> np.ndarray:
    """Ensemble-mean signal frame, sum Lambda u^2/theta on every pixel."""
    _, rows = mode_matrix(output, basis, grid)
    return np.sum(np.abs(rows) ** 2, axis=0).reshape(grid.n_y, grid.n_x)


def expected_pixel_covariance(output: SchmidtSpectrum, basis: ModeBasis, grid: PolarGrid,
                              pixels: np.ndarray, twin: bool = False) -> np.ndarray:
    """Exact intensity covariance between the listed pixels (Gaussian moment theorem)."""
    _, s = mode_matrix(output, basis, grid, pixels)
    g = s.T @ np.conj(s)
    cov = np.abs(g) ** 2
    if twin:
        _, i = mode_matrix(output, basis, grid, pixels, idler=True)
        cross = s.T @ i
        cov = cov + np.abs(i.T @ np.conj(i)) ** 2 + np.abs(cross) ** 2 + np.abs(cross.T) ** 2
    return cov
