"""Type-I degenerate phase matching and the crystal-to-detector mapping.

Wavenumbers are crystal-internal magnitudes in 1/cm, lengths in cm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDetectionPoint, NoPhaseMatch, NoSplitSolution, TotalInternalReflection


@dataclass(frozen=True)
class Crystal:
    length: float = 0.2
    n_s: float = 1.6648
    n_P: float = 1.660677
    cut_polar: float = math.radians(35.2)
    cut_azimuth: float = math.radians(90.0)

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("crystal length must be positive")
        if self.n_s < 1 or self.n_P < 1:
            raise ValueError("refractive indices must be >= 1")


@dataclass(frozen=True)
class WaveVector:
    k: float
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("polar angle must lie in [0, pi]")
        phi = (self.phi + math.pi) % (2.0 * math.pi) - math.pi
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_cartesian(cls, kx: float, ky: float, kz: float) -> "WaveVector":
        k = math.sqrt(kx * kx + ky * ky + kz * kz)
        return cls(k, math.acos(max(-1.0, min(1.0, kz / k))), math.atan2(ky, kx))

    @property
    def kx(self) -> float:
        return self.k * math.sin(self.theta) * math.cos(self.phi)

    @property
    def ky(self) -> float:
        return self.k * math.sin(self.theta) * math.sin(self.phi)

    @property
    def kz(self) -> float:
        return self.k * math.cos(self.theta)

    @property
    def transverse(self) -> tuple[float, float]:
        return self.kx, self.ky


def degenerate_polar_angle(k_P: float, k_s: float, l_c: float = math.inf) -> float:
    """Cone half-angle theta = arccos((k_P + 2 pi / l_c) / (2 k_s)).

    ``l_c = inf`` gives the angle at which the longitudinal mismatch of a
    symmetric pair vanishes.
    """
    arg = (k_P + 2.0 * math.pi / l_c) / (2.0 * k_s)
    if not -1.0 <= arg <= 1.0:
        raise NoPhaseMatch(f"arccos argument {arg:.8g} outside [-1, 1]")
    return math.acos(arg)


def longitudinal_weight(dkz, l_c: float):
    """sinc^2(dkz l_c / 2), exactly 1 at dkz = 0."""
    # np.sinc(x) = sin(pi x) / (pi x)
    return np.sinc(np.asarray(dkz, dtype=float) * l_c / (2.0 * math.pi)) ** 2


def split_aperture_cosine(l: int, theta: float, k_P: float, k_s: float, z_R: float) -> float:
    # csc^2(t) [k_P l - 2 k_s^2 z_R sin^2 t] / (2 k_s^2 z_R), simplified so l = 0 gives -1 exactly
    s2 = math.sin(theta) ** 2
    if s2 == 0.0:
        raise NoSplitSolution("split aperture undefined on the pump axis (sin theta = 0)")
    return k_P * l / (2.0 * k_s**2 * z_R * s2) - 1.0


def split_spot_aperture(l: int, theta: float, k_P: float, k_s: float, z_R: float) -> float:
    """Azimuthal separation |phi_s - phi_i| of the coincidence spots; pi means back-to-back."""
    c = split_aperture_cosine(l, theta, k_P, k_s, z_R)
    if not -1.0 <= c <= 1.0:
        raise NoSplitSolution(f"cos(delta phi) = {c:.6g} outside [-1, 1]; donut does not cross the ring")
    return math.acos(c)


def split_deviation(l: int, theta: float, k_P: float, k_s: float, z_R: float) -> float:
    """Angular deviation pi - delta_phi of each spot from the back-to-back point."""
    return math.pi - split_spot_aperture(l, theta, k_P, k_s, z_R)


def internal_to_detection(theta_int, phi, n_s: float, d: float):
    """Refract at a flat exit face (transverse k conserved) and project onto a plane at distance d."""
    theta_int = np.asarray(theta_int, dtype=float)
    s = n_s * np.sin(theta_int)
    if np.any(s >= 1.0):
        raise TotalInternalReflection("n_s sin(theta_int) >= 1")
    rho = d * s / np.sqrt(1.0 - s * s)
    x = rho * np.cos(phi)
    y = rho * np.sin(phi)
    if x.ndim == 0:
        return float(x), float(y)
    return x, y


def detection_to_internal(x, y, n_s: float, d: float):
    """Inverse of :func:`internal_to_detection`: returns (theta_int, phi)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidDetectionPoint("detection-plane coordinates must be finite")
    rho = np.hypot(x, y)
    theta_int = np.arcsin(rho / np.hypot(rho, d) / n_s)
    phi = np.arctan2(y, x)
    if theta_int.ndim == 0:
        return float(theta_int), float(phi)
    return theta_int, phi


def detector_distance_for_ring(R: float, theta_int: float, n_s: float) -> float:
    """Crystal-detector distance placing the cone theta_int at detection radius R."""
    s = n_s * math.sin(theta_int)
    if s >= 1.0:
        raise TotalInternalReflection("n_s sin(theta_int) >= 1")
    return R / math.tan(math.asin(s))
