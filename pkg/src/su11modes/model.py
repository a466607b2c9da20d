"""Angular grids, Laguerre-Gauss radial mode bases and Schmidt spectra.

Radial profiles ``u_lp(theta)`` follow the convention that the transverse
mode is ``u_lp(theta) / sqrt(theta) * exp(i l phi)`` and that
``sum_theta u_lp(theta)**2 * dtheta == 1`` on the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .errors import DomainError, ParameterError, ResolutionError

ModeIndex = Tuple[int, int]

INPUT_LAMBDA = "input-lambda"
OUTPUT_LAMBDA = "output-Lambda"


@dataclass(frozen=True)
class PolarGrid:
    """Polar analysis grid in radial angle theta (rad) and azimuth phi.

    ``n_x``, ``n_y`` and ``pitch`` describe the Cartesian camera grid the
    frames live on; ``center`` is the pixel coordinate of theta = 0.
    """

    theta_min: float
    theta_max: float
    n_theta: int
    n_phi: int = 64
    n_x: int = 64
    n_y: int = 64
    pitch: float = 0.5e-3
    center: Tuple[float, float] | None = None

    def __post_init__(self):
        if not (self.theta_max > self.theta_min >= 0):
            raise ParameterError("need theta_max > theta_min >= 0")
        if self.n_theta < 2:
            raise ParameterError("n_theta must be >= 2")
        if self.n_phi < 4:
            raise ParameterError("n_phi must be >= 4")
        if self.pitch <= 0:
            raise ParameterError("pitch must be positive")
        if self.center is None:
            object.__setattr__(
                self, "center", ((self.n_x - 1) / 2.0, (self.n_y - 1) / 2.0)
            )

    @property
    def dtheta(self) -> float:
        return (self.theta_max - self.theta_min) / self.n_theta

    @property
    def thetas(self) -> np.ndarray:
        return self.theta_min + (np.arange(self.n_theta) + 0.5) * self.dtheta

    @property
    def phis(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def theta_floor(self) -> float:
        return 0.5 * self.dtheta

    def phi_bin(self, phi):
        """Nearest azimuthal bin, periodic in 2 pi."""
        k = np.rint(np.asarray(phi) * self.n_phi / (2 * np.pi)).astype(int)
        return np.mod(k, self.n_phi)

    def pixel_polar(self) -> Tuple[np.ndarray, np.ndarray]:
        """(theta, phi) of every pixel center, arrays of shape (n_y, n_x)."""
        cx, cy = self.center
        x = (np.arange(self.n_x) - cx) * self.pitch
        y = (np.arange(self.n_y) - cy) * self.pitch
        xx, yy = np.meshgrid(x, y)
        return np.hypot(xx, yy), np.mod(np.arctan2(yy, xx), 2 * np.pi)

    @classmethod
    def from_camera(cls, n_x: int, n_y: int, pitch: float, n_theta: int = 64,
                    n_phi: int = 64, center=None) -> "PolarGrid":
        """Polar grid covering the disc inscribed in a Cartesian camera frame."""
        if center is None:
            center = ((n_x - 1) / 2.0, (n_y - 1) / 2.0)
        cx, cy = center
        r_px = min(cx, cy, n_x - 1 - cx, n_y - 1 - cy)
        return cls(0.0, r_px * pitch, n_theta, n_phi, n_x, n_y, pitch,
                   (float(cx), float(cy)))


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Mode weights keyed by (l, p).

    ``kind`` is ``"input-lambda"`` for normalized Schmidt eigenvalues and
    ``"output-Lambda"`` for per-mode photon numbers.
    """

    weights: Mapping[ModeIndex, float]
    kind: str = INPUT_LAMBDA

    def __post_init__(self):
        if self.kind not in (INPUT_LAMBDA, OUTPUT_LAMBDA):
            raise ParameterError(f"unknown spectrum kind {self.kind!r}")
        w = {}
        for (l, p), v in self.weights.items():
            if p < 0:
                raise ParameterError(f"radial index must be >= 0, got {p}")
            v = float(v)
            if not v >= 0:
                raise ParameterError(f"negative weight {v} at {(l, p)}")
            w[(int(l), int(p))] = v
        if self.kind == INPUT_LAMBDA and abs(sum(w.values()) - 1.0) > 1e-12:
            raise ParameterError("input-lambda weights must sum to 1")
        object.__setattr__(self, "weights", dict(sorted(w.items())))

    @property
    def modes(self):
        return list(self.weights)

    def values(self) -> np.ndarray:
        return np.array(list(self.weights.values()))

    def total(self) -> float:
        return float(sum(self.weights.values()))

    def normalized(self) -> Dict[ModeIndex, float]:
        t = self.total()
        return {k: v / t for k, v in self.weights.items()}

    def schmidt_number(self) -> float:
        w = self.values()
        w = w / w.sum()
        return 1.0 / float(np.sum(w**2))

    def azimuthal(self) -> Dict[int, float]:
        """Weights summed over p, keyed by l."""
        out: Dict[int, float] = {}
        for (l, _), v in self.weights.items():
            out[l] = out.get(l, 0.0) + v
        return dict(sorted(out.items()))

    def radial(self) -> Dict[int, float]:
        """Weights summed over l, keyed by p."""
        out: Dict[int, float] = {}
        for (_, p), v in self.weights.items():
            out[p] = out.get(p, 0.0) + v
        return dict(sorted(out.items()))

    def to_rows(self):
        return [(l, p, v) for (l, p), v in self.weights.items()]


def geometric_spectrum(mu: float, l_max: int, p_max: int,
                       order_max: int | None = None) -> SchmidtSpectrum:
    """Double-Gaussian surrogate spectrum, lambda_lp proportional to mu**(2p+|l|).

    ``order_max`` additionally drops modes with 2p + |l| > order_max, which
    truncates the law at a fixed weight level instead of along a rectangle.
    """
    if not 0 < mu < 1:
        raise ParameterError(f"mu must lie in (0, 1), got {mu}")
    if l_max < 0 or p_max < 0:
        raise ParameterError("l_max and p_max must be >= 0")
    if order_max is not None and order_max < 0:
        raise ParameterError("order_max must be >= 0")
    raw = {
        (l, p): mu ** (2 * p + abs(l))
        for l in range(-l_max, l_max + 1)
        for p in range(p_max + 1)
        if order_max is None or 2 * p + abs(l) <= order_max
    }
    total = math.fsum(raw.values())
    return SchmidtSpectrum({k: v / total for k, v in raw.items()}, INPUT_LAMBDA)


def truncation_for_tail(mu: float, tail: float = 1e-6) -> int:
    """Smallest symmetric cutoff n with discarded geometric weight below ``tail``.

    Used as l_max = p_max = n; the untruncated double series sums to
    (1 + mu) / ((1 - mu) * (1 - mu**2)).
    """
    if not 0 < mu < 1:
        raise ParameterError(f"mu must lie in (0, 1), got {mu}")
    full = (1 + mu) / ((1 - mu) * (1 - mu**2))
    n = 0
    while True:
        s = geometric_spectrum(mu, n, n)
        kept = sum(mu ** (2 * p + abs(l)) for (l, p) in s.weights)
        if 1 - kept / full < tail:
            return n
        n += 1


def _lg_transverse(l: int, p: int, theta, waist: float) -> np.ndarray:
    """sqrt(2 pi) times the normalized 2D LG radial amplitude, i.e. u/sqrt(theta)."""
    al = abs(l)
    theta = np.asarray(theta, dtype=float)
    x = 2.0 * theta**2 / waist**2
    log_norm = 0.5 * (math.log(2.0) + gammaln(p + 1) - math.log(math.pi) - gammaln(p + al + 1))
    amp = np.exp(log_norm) / waist
    return (math.sqrt(2 * math.pi) * amp * (math.sqrt(2.0) * theta / waist) ** al
            * eval_genlaguerre(p, al, x) * np.exp(-(theta**2) / waist**2))


@dataclass(frozen=True)
class ModeBasis:
    """Radial mode profiles sampled on ``grid.thetas``.

    ``functions[(l, p)]`` holds ``u_lp`` on the grid.  Off-grid values are
    produced by applying the stored Gram-Schmidt coefficients to the
    analytic profiles, so ``transverse`` is smooth and finite at theta = 0.
    """

    grid: PolarGrid
    waist: float
    functions: Mapping[ModeIndex, np.ndarray]
    shared_radial: bool = False
    _coeffs: Mapping[int, np.ndarray] = field(default=None, repr=False)

    @property
    def modes(self):
        return list(self.functions)

    def covers(self, index: ModeIndex) -> bool:
        return index in self.functions

    def _radial_l(self, l: int) -> int:
        return 0 if self.shared_radial else abs(l)

    def transverse(self, l: int, p: int, theta) -> np.ndarray:
        """u_lp(theta) / sqrt(theta) at arbitrary radial angles."""
        if (l, p) not in self.functions:
            raise DomainError(f"mode {(l, p)} not in basis")
        lr = self._radial_l(l)
        c = self._coeffs[lr][p]
        out = np.zeros(np.shape(theta))
        for k in range(p + 1):
            if c[k] != 0.0:
                out = out + c[k] * _lg_transverse(lr, k, theta, self.waist)
        return out

    def profile(self, l: int, p: int, theta) -> np.ndarray:
        """u_lp(theta) at arbitrary radial angles."""
        return self.transverse(l, p, theta) * np.sqrt(theta)

    def gram(self, l: int) -> np.ndarray:
        """Matrix of grid inner products among the profiles with azimuthal index l."""
        ps = sorted(p for (ll, p) in self.functions if ll == l)
        u = np.array([self.functions[(l, p)] for p in ps])
        return u @ u.T * self.grid.dtheta


def build_lg_basis(grid: PolarGrid, waist: float, l_max: int, p_max: int,
                   shared_radial: bool = False) -> ModeBasis:
    """Laguerre-Gauss radial profiles of angular waist ``waist``.

    Profiles are re-orthonormalized on the grid by Gram-Schmidt within each l.
    With ``shared_radial`` every l reuses the l = 0 radial profiles.
    """
    if waist <= 0:
        raise ParameterError("waist must be positive")
    if waist / grid.dtheta < 8:
        raise ResolutionError(
            f"waist {waist:g} rad spans {waist / grid.dtheta:.1f} theta bins, need >= 8"
        )
    th = grid.thetas
    dth = grid.dtheta
    coeffs = {}
    radial_ls = {0} if shared_radial else set(range(l_max + 1))
    for lr in sorted(radial_ls):
        raw = np.array([_lg_transverse(lr, p, th, waist) * np.sqrt(th) for p in range(p_max + 1)])
        # Gram-Schmidt expressed as a lower-triangular coefficient matrix
        c = np.zeros((p_max + 1, p_max + 1))
        orth = []
        for p in range(p_max + 1):
            v = raw[p].copy()
            cp = np.zeros(p_max + 1)
            cp[p] = 1.0
            for q, oq in enumerate(orth):
                proj = np.dot(oq, v) * dth
                v -= proj * oq
                cp -= proj * c[q]
            norm = math.sqrt(np.dot(v, v) * dth)
            if norm < 1e-8:
                raise ResolutionError(f"profile (l={lr}, p={p}) not representable on grid")
            c[p] = cp / norm
            orth.append(v / norm)
        coeffs[lr] = c
    functions = {}
    for l in range(-l_max, l_max + 1):
        lr = 0 if shared_radial else abs(l)
        u = coeffs[lr] @ np.array(
            [_lg_transverse(lr, p, th, waist) * np.sqrt(th) for p in range(p_max + 1)]
        )
        for p in range(p_max + 1):
            functions[(l, p)] = u[p]
    return ModeBasis(grid, float(waist), functions, shared_radial, coeffs)


def _check_angle(grid: PolarGrid, theta: float):
    if not (grid.theta_min <= theta <= grid.theta_max):
        raise DomainError(
            f"theta={theta:g} outside grid [{grid.theta_min:g}, {grid.theta_max:g}]"
        )


def evaluate_tpa(spectrum: SchmidtSpectrum, basis: ModeBasis,
                 qs: Tuple[float, float], qi: Tuple[float, float]) -> complex:
    """Two-photon amplitude F(q_s, q_i) from its Schmidt expansion."""
    if spectrum.kind != INPUT_LAMBDA:
        raise ParameterError("evaluate_tpa needs an input-lambda spectrum")
    th_s, ph_s = qs
    th_i, ph_i = qi
    _check_angle(basis.grid, th_s)
    _check_angle(basis.grid, th_i)
    total = 0j
    for (l, p), lam in spectrum.weights.items():
        if lam == 0.0:
            continue
        us = basis.transverse(l, p, th_s)
        ui = basis.transverse(l, p, th_i)
        total += math.sqrt(lam) * us * ui * np.exp(1j * l * (ph_s - ph_i))
    return complex(total)


def spectrum_from_rows(rows: Iterable[Tuple[int, int, float]], kind: str) -> SchmidtSpectrum:
    return SchmidtSpectrum({(int(l), int(p)): float(w) for l, p, w in rows}, kind)
