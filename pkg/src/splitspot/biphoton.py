"""Two-photon amplitude on detection-plane coordinates and OAM mask algebra.

Detection-plane points are mapped back into the crystal with
:func:`splitspot.phasematch.detection_to_internal`; the photon then carries
the internal transverse wavevector ``q = k_s sin(theta_int) (cos phi, sin phi)``.
The pump propagates along +z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson
from scipy.special import comb, eval_genlaguerre

from . import defaults
from .errors import InconsistentScene, InvalidDetectionPoint, ThinCrystalViolation
from .lgbeam import LaguerreGaussianMode, fourier_extent, lg_fourier
from .phasematch import (
    Crystal,
    degenerate_polar_angle,
    internal_to_detection,
    longitudinal_weight,
)


@dataclass(frozen=True)
class Scene:
    pump: LaguerreGaussianMode
    crystal: Crystal = field(default_factory=Crystal)
    k_P: float = defaults.K_P
    k_s: float = defaults.K_S
    detector_distance: float = defaults.DETECTOR_DISTANCE

    def __post_init__(self):
        if not (self.k_P > 0 and self.k_s > 0 and self.detector_distance > 0):
            raise InconsistentScene("k_P, k_s and detector distance must be positive")
        if not self.crystal.length < self.pump.z_R:
            raise ThinCrystalViolation(
                f"crystal length {self.crystal.length} cm is not below the pump Rayleigh range {self.pump.z_R} cm"
            )
        if abs(self.pump.wavelength * self.k_P / (2 * math.pi) - 1.0) > 1e-6:
            raise InconsistentScene("pump wavelength must be the in-crystal wavelength 2 pi / k_P")
        # degenerate: k_s = n_s k_P / (2 n_P)
        expected = self.crystal.n_s * self.k_P / (2.0 * self.crystal.n_P)
        if abs(self.k_s / expected - 1.0) > 0.005:
            raise InconsistentScene(f"k_s = {self.k_s:.6g}/cm is not degenerate (expected {expected:.6g}/cm)")

    @classmethod
    def reference(cls, l: int = 4, p: int = 0, **overrides) -> "Scene":
        """Scene with the experiment's constants; keyword overrides replace fields."""
        k_P = overrides.pop("k_P", defaults.K_P)
        pump = overrides.pop("pump", None)
        if pump is None:
            pump = LaguerreGaussianMode(l, p, z_R=defaults.Z_R, wavelength=2 * math.pi / k_P)
        return cls(pump=pump, k_P=k_P, **overrides)

    @property
    def ring_theta(self) -> float:
        """Internal cone angle where a back-to-back pair has zero longitudinal mismatch."""
        return degenerate_polar_angle(self.k_P, self.k_s)

    @property
    def ring_radius(self) -> float:
        return internal_to_detection(self.ring_theta, 0.0, self.crystal.n_s, self.detector_distance)[0]

    @property
    def q_ring(self) -> float:
        return self.k_s * math.sin(self.ring_theta)


def _as_xy(point):
    x, y = point
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidDetectionPoint("detection-plane coordinates must be finite")
    return x, y


def transverse_q(scene: Scene, x, y):
    """Internal transverse wavevector (qx, qy) of a photon landing at (x, y)."""
    c = scene.k_s / scene.crystal.n_s
    scale = c / np.hypot(np.hypot(x, y), scene.detector_distance)
    return scale * x, scale * y


def detection_point(scene: Scene, qx, qy):
    """Inverse of :func:`transverse_q`."""
    c = scene.k_s / scene.crystal.n_s
    s = np.hypot(qx, qy) / c
    if np.any(s >= 1.0):
        raise InvalidDetectionPoint("transverse wavevector exits the crystal under total internal reflection")
    scale = scene.detector_distance / (c * np.sqrt(1.0 - s * s))
    return scale * qx, scale * qy


def q_jacobian(scene: Scene, x, y):
    """|d(qx, qy) / d(x, y)| of the detection-plane to q-space map."""
    c = scene.k_s / scene.crystal.n_s
    d2 = scene.detector_distance**2
    return c * c * d2 / (np.asarray(x) ** 2 + np.asarray(y) ** 2 + d2) ** 2


def _dkz(scene: Scene, qs2, qi2):
    k2 = scene.k_s**2
    return np.sqrt(k2 - qs2) + np.sqrt(k2 - qi2) - scene.k_P


def delta_k(scene: Scene, signal_point, idler_point):
    """(dkx, dky, dkz) of k_s + k_i - k_P for photons landing at the two points."""
    sx, sy = _as_xy(signal_point)
    ix, iy = _as_xy(idler_point)
    qsx, qsy = transverse_q(scene, sx, sy)
    qix, qiy = transverse_q(scene, ix, iy)
    dkz = _dkz(scene, qsx**2 + qsy**2, qix**2 + qiy**2)
    return qsx + qix, qsy + qiy, dkz


def amplitude_F(scene: Scene, signal_point, idler_point):
    """|sinc| longitudinal factor times the pump transform at the transverse mismatch."""
    dkx, dky, dkz = delta_k(scene, signal_point, idler_point)
    return np.sqrt(longitudinal_weight(dkz, scene.crystal.length)) * lg_fourier(scene.pump, dkx, dky)


def density_q(scene: Scene, qsx, qsy, qix, qiy):
    """Unnormalized pair density per d^2q_s d^2q_i."""
    dkz = _dkz(scene, qsx**2 + qsy**2, qix**2 + qiy**2)
    ft = lg_fourier(scene.pump, qsx + qix, qsy + qiy)
    return longitudinal_weight(dkz, scene.crystal.length) * (ft.real**2 + ft.imag**2)


def pair_density(scene: Scene, signal_point, idler_point):
    """Unnormalized pair density per unit detection-plane area of each photon.

    Equals |amplitude_F|^2 times the area Jacobians of both photons.
    """
    sx, sy = _as_xy(signal_point)
    ix, iy = _as_xy(idler_point)
    qsx, qsy = transverse_q(scene, sx, sy)
    qix, qiy = transverse_q(scene, ix, iy)
    return density_q(scene, qsx, qsy, qix, qiy) * q_jacobian(scene, sx, sy) * q_jacobian(scene, ix, iy)


@dataclass(frozen=True)
class DensityTable:
    """Truncation region, single-photon marginal and normalization for a scene.

    Pairs are written as the transverse sum ``Q = q_s + q_i`` and half
    difference ``D = (q_s - q_i) / 2`` (unit Jacobian). The modelled pair
    universe is ``|Q| <= Q_max`` and ``d_lo <= |D| <= d_hi``, a band of
    ``BAND_NULLS`` sinc nulls either side of the ring; the sampler and every
    rate integral use the same region.
    """

    d_lo: float
    d_hi: float
    Q_max: float
    t_max: float
    radial_peak: float
    q_grid: np.ndarray
    marginal: np.ndarray
    total: float

    def marginal_q(self, q):
        q = np.asarray(q, dtype=float)
        return np.interp(q, self.q_grid, self.marginal, left=0.0, right=0.0)

    def in_region(self, qsx, qsy, qix, qiy):
        dd = 0.25 * ((qsx - qix) ** 2 + (qsy - qiy) ** 2)
        QQ = (qsx + qix) ** 2 + (qsy + qiy) ** 2
        return (QQ <= self.Q_max**2) & (dd >= self.d_lo**2) & (dd <= self.d_hi**2)


BAND_NULLS = 10


def pump_radial_weight(pump: LaguerreGaussianMode, t):
    """|F|^2 as a function of t = |Q|^2 w0^2 / 2, up to a constant."""
    a = abs(pump.l)
    return t**a * eval_genlaguerre(pump.p, a, t) ** 2 * np.exp(-t)


@lru_cache(maxsize=32)
def density_table(scene: Scene, n_q: int = 769, n_rad: int = 160, n_az: int = 512) -> DensityTable:
    q0 = scene.q_ring
    kz0 = math.sqrt(scene.k_s**2 - q0**2)
    # |D| offset reaching the first sinc null of a back-to-back pair
    d_null = (math.pi / scene.crystal.length) * kz0 / q0
    d_lo, d_hi = max(0.0, q0 - BAND_NULLS * d_null), q0 + BAND_NULLS * d_null
    Q_max = fourier_extent(scene.pump)
    t_max = 0.5 * (Q_max * scene.pump.w0) ** 2
    t = np.linspace(0.0, t_max, 20001)
    radial_peak = 1.001 * float(np.max(pump_radial_weight(scene.pump, t)))

    nodes, weights = np.polynomial.legendre.leggauss(n_rad)
    Qr = 0.5 * Q_max * (nodes + 1.0)
    wr = 0.5 * Q_max * weights * Qr
    az = np.arange(n_az) * (2.0 * math.pi / n_az)
    Qx = (Qr[:, None] * np.cos(az)[None, :]).ravel()
    Qy = (Qr[:, None] * np.sin(az)[None, :]).ravel()
    w = np.repeat(wr, n_az) * (2.0 * math.pi / n_az)
    ft = lg_fourier(scene.pump, Qx, Qy)
    pump_w = w * (ft.real**2 + ft.imag**2)

    q_grid = np.linspace(max(0.0, d_lo - 0.5 * Q_max), d_hi + 0.5 * Q_max, n_q)
    marginal = np.empty(n_q)
    k2 = scene.k_s**2
    l_c = scene.crystal.length
    for j, qi in enumerate(q_grid):
        # q_i along +x, q_s = Q - q_i, D = Q / 2 - q_i
        qs2 = (Qx - qi) ** 2 + Qy**2
        dd = (0.5 * Qx - qi) ** 2 + 0.25 * Qy**2
        inside = (dd >= d_lo**2) & (dd <= d_hi**2)
        dkz = np.sqrt(k2 - qs2) + math.sqrt(k2 - qi * qi) - scene.k_P
        marginal[j] = np.sum(pump_w * longitudinal_weight(dkz, l_c) * inside)
    total = float(simpson(2.0 * math.pi * q_grid * marginal, x=q_grid))
    return DensityTable(
        d_lo=d_lo,
        d_hi=d_hi,
        Q_max=Q_max,
        t_max=t_max,
        radial_peak=radial_peak,
        q_grid=q_grid,
        marginal=marginal,
        total=total,
    )


def marginal_density(scene: Scene, x, y):
    """Normalized single-photon density per unit detection-plane area (integrates to 1)."""
    table = density_table(scene)
    qx, qy = transverse_q(scene, x, y)
    return table.marginal_q(np.hypot(qx, qy)) * q_jacobian(scene, x, y) / table.total


def normalized_pair_density(scene: Scene, signal_point, idler_point):
    """:func:`pair_density` divided by the truncated total, so it integrates to 1."""
    table = density_table(scene)
    sx, sy = _as_xy(signal_point)
    ix, iy = _as_xy(idler_point)
    qsx, qsy = transverse_q(scene, sx, sy)
    qix, qiy = transverse_q(scene, ix, iy)
    keep = table.in_region(qsx, qsy, qix, qiy)
    dens = density_q(scene, qsx, qsy, qix, qiy) * q_jacobian(scene, sx, sy) * q_jacobian(scene, ix, iy)
    return np.where(keep, dens, 0.0) / table.total


# --- OAM decomposition -----------------------------------------------------


@dataclass(frozen=True)
class OamState:
    """Weights of a j_z decomposition in units of the constant G.

    ``amplitudes`` holds ``(j_z, weight)`` pairs. For ``side == "pair"`` the
    j_z is the signal's (the idler carries ``l - j_z``); for ``side == "idler"``
    it is the idler's.
    """

    l: int
    amplitudes: tuple[tuple[int, float], ...]
    side: str = "pair"

    @property
    def total(self) -> float:
        return float(sum(w for _, w in self.amplitudes))

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.amplitudes)


def _check_l(l):
    if l < 0 or int(l) != l:
        raise ValueError(f"l must be a nonnegative integer, got {l}")


def oam_amplitudes(l: int) -> OamState:
    _check_l(l)
    return OamState(l, tuple((m, float(comb(l, m, exact=True))) for m in range(l + 1)), "pair")


def idler_projection_no_mask(l: int) -> OamState:
    """Idler state after tracing the signal without a mask: C(l, m) on |j_z = l - m>."""
    _check_l(l)
    return OamState(l, tuple((l - m, float(comb(l, m, exact=True))) for m in range(l + 1)), "idler")


def mask_amplitude(l: int, q: int) -> float:
    """Amplitude behind a q phase mask in the idler arm, in units of G."""
    _check_l(l)
    if not 0 <= q <= l:
        return 0.0
    return float(comb(l, q, exact=True))
