"""End-to-end runs behind the command-line interface.

Each ``run_*`` function takes a validated ``RunConfig`` and returns plain
tables (header, rows) so the CLI only decides where they are written.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from .config import RunConfig
from .model import PolarGrid, build_lg_basis, geometric_spectrum
from .recon import (align_spectrum, azimuthal_curves, mode_count, oam_spectrum_at,
                    oam_spectrum_avg, radial_covariance, radial_modes, total_mode_count)
from .errors import UndefinedWidthError
from .stats import curve_fwhm
from .su11 import InterferometerConfig, output_spectrum, phase_sweep, uniform_phases
from .synth import FrameStack, NoiseModel, synthesize

THREADS_ENV = "SU11MODES_THREADS"


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass
class Source:
    grid: PolarGrid
    basis: object
    input_spectrum: object
    output_spectrum: object
    interferometer: InterferometerConfig


def build_source(cfg: RunConfig) -> Source:
    s, i = cfg.source, cfg.interferometer
    grid = PolarGrid.from_camera(s.n_x, s.n_y, s.pitch, n_theta=128,
                                 n_phi=cfg.analysis.azimuthal_bins)
    basis = build_lg_basis(grid, s.waist, s.l_max, s.p_max)
    spec_in = geometric_spectrum(s.mu, s.l_max, s.p_max, s.order_max)
    icfg = InterferometerConfig(i.G1, i.G2, i.phi)
    return Source(grid, basis, spec_in, output_spectrum(icfg, spec_in), icfg)


def run_simulate(cfg: RunConfig, source: Optional[Source] = None) -> FrameStack:
    source = source or build_source(cfg)
    y = cfg.synthesis
    noise = None
    if y.noise_sigma > 0 or y.background > 0:
        noise = NoiseModel(y.noise_sigma, y.background)
    return synthesize(source.output_spectrum, source.basis, source.grid, y.n_frames, y.seed,
                      twin=y.twin, noise=noise, temporal_modes=y.temporal_modes)


def truth_table(source: Source):
    rows = [(l, p, lam, source.output_spectrum.weights[(l, p)])
            for (l, p), lam in source.input_spectrum.weights.items()]
    return ["l", "p", "lambda", "Lambda"], rows


def run_phase_sweep(cfg: RunConfig, source: Optional[Source] = None):
    source = source or build_source(cfg)
    i = cfg.interferometer
    sweep = phase_sweep(i.G1, i.G2, uniform_phases(cfg.analysis.n_phases),
                        source.input_spectrum)
    return ["phi", "total_photons"], sweep


@dataclass
class OamResult:
    theta0s: np.ndarray
    curves: list
    per_theta: list
    average: object
    fwhm: List[float]
    counts: List[float]
    count_avg: float


def run_oam(stack: FrameStack, cfg: RunConfig) -> OamResult:
    a = cfg.analysis
    theta0s = a.theta0 if a.theta0 else None
    th, curves = azimuthal_curves(stack.frames, stack.grid, theta0s, a.azimuthal_halfwidth,
                                  a.azimuthal_bins, a.correct_pixels, workers=thread_count())
    per = [oam_spectrum_at(c, t).normalize() for c, t in zip(curves, th)]
    widths = []
    for c in curves:
        try:
            widths.append(curve_fwhm(c))
        except UndefinedWidthError:
            widths.append(float("nan"))
    counts = [mode_count(s.weights) for s in per]
    avg = oam_spectrum_avg(curves, th).normalize() if len(curves) >= 2 else per[0]
    return OamResult(np.asarray(th), curves, per, avg, widths, counts, mode_count(avg.weights))


def oam_tables(res: OamResult) -> Dict[str, tuple]:
    per_rows = [(t, l, w) for t, s in zip(res.theta0s, res.per_theta)
                for l, w in s.weights.items()]
    curve_rows = []
    for t, c in zip(res.theta0s, res.curves):
        x, y = c.centered
        curve_rows.extend((t, dx, v) for dx, v in zip(x, y))
    return {
        "oam_theta0.csv": (["theta0", "l", "weight"], per_rows),
        "oam_average.csv": (["l", "weight"], list(res.average.weights.items())),
        "fwhm.csv": (["theta0", "fwhm", "fwhm_times_theta0", "azimuthal_count"],
                     [(t, f, f * t, k) for t, f, k in zip(res.theta0s, res.fwhm, res.counts)]),
        "covariance_curves.csv": (["theta0", "dphi", "covariance"], curve_rows),
    }


@dataclass
class RadialResult:
    thetas: np.ndarray
    covariance: np.ndarray
    modes: object
    count: float


def run_radial(stack: FrameStack, cfg: RunConfig) -> RadialResult:
    a = cfg.analysis
    th, cov = radial_covariance(stack.frames, stack.grid, a.radial_phi0, a.radial_halfwidth,
                                a.radial_bins)
    modes = radial_modes(cov, th, a.radial_modes)
    return RadialResult(th, cov, modes, mode_count(modes.weights))


def radial_tables(res: RadialResult) -> Dict[str, tuple]:
    n = len(res.thetas)
    cov_rows = [(res.thetas[i], res.thetas[j], res.covariance[i, j])
                for i in range(n) for j in range(n)]
    w = res.modes.weights
    wn = res.modes.normalized_weights if w.sum() > 0 else w
    shape_hdr = ["theta"] + [f"u{p}" for p in range(len(w))]
    shape_rows = [(t, *res.modes.shapes[:, k]) for k, t in enumerate(res.thetas)]
    return {
        "radial_covariance.csv": (["theta", "theta_prime", "covariance"], cov_rows),
        "radial_modes.csv": (["p", "weight", "normalized_weight"],
                             [(p, w[p], wn[p]) for p in range(len(w))]),
        "radial_shapes.csv": (shape_hdr, shape_rows),
    }


def mode_count_table(oam: OamResult, radial: RadialResult):
    rep = total_mode_count(oam.count_avg, radial.count,
                           dict(zip(map(float, oam.theta0s), oam.counts)))
    rows = [("azimuthal_count_avg", rep.azimuthal_count_avg),
            ("radial_count", rep.radial_count),
            ("total", rep.total),
            ("spectrum_sides", rep.spectrum_sides)]
    return ["quantity", "value"], rows


@dataclass
class VerifyResult:
    passed: bool
    table: tuple
    tv_distance: float
    count_rec: float
    count_true: float


def run_verify(cfg: RunConfig, source: Optional[Source] = None,
               stack: Optional[FrameStack] = None) -> VerifyResult:
    """Closed loop: simulate, reconstruct the averaged OAM spectrum, compare to truth.

    Passes when the total-variation distance between the normalized spectra
    and the relative mode-count error are within the configured tolerances.
    """
    source = source or build_source(cfg)
    stack = stack if stack is not None else run_simulate(cfg, source)
    res = run_oam(stack, cfg)
    truth = source.output_spectrum.azimuthal()
    ls, rec, tru = align_spectrum(res.average, truth)
    tv = 0.5 * float(np.abs(rec - tru).sum())
    k_rec, k_true = mode_count(rec), mode_count(tru)
    ok = tv <= cfg.analysis.tv_tolerance and \
        abs(k_rec - k_true) <= cfg.analysis.count_tolerance * k_true
    rows = [(int(l), r, t, (r - t) / t if t > 0 else float("nan"))
            for l, r, t in zip(ls, rec, tru)]
    return VerifyResult(ok, (["l", "reconstructed", "truth", "relative_error"], rows),
                        tv, k_rec, k_true)
