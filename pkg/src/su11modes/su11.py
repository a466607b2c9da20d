"""Two-amplifier SU(1,1) gain algebra on a Schmidt spectrum."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from .errors import DomainError, ParameterError, RangeError
from .model import (INPUT_LAMBDA, OUTPUT_LAMBDA, ModeBasis, ModeIndex, SchmidtSpectrum,
                    geometric_spectrum)

# cosh/sinh overflow double precision just above 710
MAX_HYPERBOLIC_ARG = 700.0


@dataclass(frozen=True)
class InterferometerConfig:
    G1: float
    G2: float
    phi: float

    def __post_init__(self):
        if self.G1 < 0 or self.G2 < 0:
            raise ParameterError("gains must be nonnegative")
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))


@dataclass(frozen=True)
class EffectiveWeights:
    """Bogoliubov coefficients per mode: A_out = w1 A_in + w2 B_in^dagger."""

    modes: tuple
    w1: np.ndarray
    w2: np.ndarray

    def as_dict(self) -> Dict[ModeIndex, tuple]:
        return {m: (complex(a), complex(b)) for m, a, b in zip(self.modes, self.w1, self.w2)}


def _require_input(spectrum: SchmidtSpectrum):
    if spectrum.kind != INPUT_LAMBDA:
        raise ParameterError("expected an input-lambda spectrum")


def _check_range(*args):
    for a in args:
        if np.any(np.abs(a) > MAX_HYPERBOLIC_ARG):
            raise RangeError("hyperbolic argument exceeds 700; gain too large for double precision")


def weights_for_lambda(cfg: InterferometerConfig, lam, extended: bool = False):
    """Vectorized (w1, w2) for an array of Schmidt eigenvalues.

    With ``extended=True`` the hyperbolic functions are evaluated in
    ``np.longdouble`` and complex long-double arrays are returned; at high
    gain |w|^2 reaches 1e8 and double precision alone resolves
    |w1|^2 - |w2|^2 only to about 1e-8.
    """
    ftype = np.longdouble if extended else float
    s = np.sqrt(np.asarray(lam, dtype=ftype))
    a1, a2 = s * ftype(cfg.G1), s * ftype(cfg.G2)
    # cosh(a1) cosh(a2) grows like e^(a1 + a2)
    _check_range(a1 + a2)
    phi = ftype(cfg.phi)
    e = np.cos(phi) + 1j * np.sin(phi)
    w1 = np.cosh(a1) * np.cosh(a2) + e * np.sinh(a1) * np.sinh(a2)
    w2 = np.sinh(a1) * np.cosh(a2) + e * np.cosh(a1) * np.sinh(a2)
    return w1, w2


def effective_weights(cfg: InterferometerConfig, spectrum: SchmidtSpectrum) -> EffectiveWeights:
    _require_input(spectrum)
    w1, w2 = weights_for_lambda(cfg, spectrum.values())
    return EffectiveWeights(tuple(spectrum.modes), w1, w2)


def output_spectrum(cfg: InterferometerConfig, spectrum: SchmidtSpectrum) -> SchmidtSpectrum:
    """Per-mode output photon numbers Lambda_lp = |w2|^2."""
    _require_input(spectrum)
    _, w2 = weights_for_lambda(cfg, spectrum.values())
    lam_out = np.abs(w2) ** 2
    return SchmidtSpectrum(dict(zip(spectrum.modes, lam_out)), OUTPUT_LAMBDA)


def high_gain_approx(cfg: InterferometerConfig, spectrum: SchmidtSpectrum) -> SchmidtSpectrum:
    _require_input(spectrum)
    s = np.sqrt(spectrum.values())
    arg = s * (cfg.G1 + cfg.G2)
    _check_range(arg)
    fringe = abs(1 + np.exp(1j * cfg.phi)) ** 2
    vals = 0.25 * np.sinh(arg) ** 2 * fringe
    return SchmidtSpectrum(dict(zip(spectrum.modes, vals)), OUTPUT_LAMBDA)


def approx_validity(cfg: InterferometerConfig, lam: float, ratio_threshold: float = 10.0) -> dict:
    """Both sides of the high-gain validity condition for one eigenvalue.

    ``valid`` is lhs >= ratio_threshold * rhs; it is reported, never enforced.
    """
    if not 0 < lam <= 1:
        raise ParameterError("lambda must lie in (0, 1]")
    s = math.sqrt(lam)
    _check_range(s * (cfg.G1 + cfg.G2))
    lhs = math.sinh(s * (cfg.G1 + cfg.G2)) * abs(1 + np.exp(1j * cfg.phi))
    rhs = math.sinh(s * abs(cfg.G1 - cfg.G2))
    return {"lhs": lhs, "rhs": rhs, "valid": bool(lhs >= ratio_threshold * rhs)}


def mean_photons_vs_angle(cfg: InterferometerConfig, spectrum: SchmidtSpectrum,
                          basis: ModeBasis, theta) -> np.ndarray:
    """Mean signal photon number per plane-wave mode at radial angle theta."""
    grid = basis.grid
    th = np.asarray(theta, dtype=float)
    if np.any(th < grid.theta_min) or np.any(th > grid.theta_max):
        raise DomainError("theta outside basis grid")
    lam_out = output_spectrum(cfg, spectrum)
    total = np.zeros(th.shape)
    for (l, p), big in lam_out.weights.items():
        if big > 0:
            total += big * basis.transverse(l, p, th) ** 2
    return total


def total_photons(cfg: InterferometerConfig, spectrum: SchmidtSpectrum) -> float:
    _require_input(spectrum)
    _, w2 = weights_for_lambda(cfg, spectrum.values())
    return float(np.sum(np.abs(w2) ** 2))


def phase_sweep(G1: float, G2: float, phases: Sequence[float],
                spectrum: SchmidtSpectrum) -> list:
    """(phi, total photons) over the given interferometer phases."""
    phases = list(phases)
    if not phases:
        raise ParameterError("empty phase grid")
    return [(float(ph), total_photons(InterferometerConfig(G1, G2, ph), spectrum))
            for ph in phases]


def uniform_phases(n: int) -> np.ndarray:
    if n < 1:
        raise ParameterError("need at least one phase")
    return 2 * np.pi * np.arange(n) / n


def mu_for_oam_count(target: float, cfg: InterferometerConfig, l_max: int, p_max: int,
                     order_max: int | None = None, bracket=(0.05, 0.95)) -> float:
    """Geometric-source mu whose output spectrum has azimuthal count ``target``.

    The count is the participation ratio of Lambda_l = sum_p Lambda_lp.
    """
    from scipy.optimize import brentq

    def count(mu):
        w = np.array(list(output_spectrum(cfg, geometric_spectrum(mu, l_max, p_max,
                                                                  order_max)).azimuthal().values()))
        w = w / w.sum()
        return 1.0 / float(np.sum(w**2)) - target

    lo, hi = bracket
    if count(lo) * count(hi) > 0:
        raise ParameterError(f"azimuthal count {target} not reachable for mu in {bracket}")
    return float(brentq(count, lo, hi, xtol=1e-10))
