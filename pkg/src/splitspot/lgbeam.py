"""Laguerre-Gaussian pump modes at the waist plane and their 2-d Fourier transforms.

Lengths are in cm and transverse wavenumbers in 1/cm throughout.

Fourier convention::

    F(qx, qy) = integral psi(x, y) exp(-i (qx x + qy y)) dx dy

With this convention the transform of a normalized LG_p^l mode of waist ``w0``
is ``2 pi (-i)^|l| (-1)^p`` times the normalized LG_p^l mode of waist
``2 / w0`` evaluated in q-space, so Parseval reads
``int |psi|^2 d^2r = int |F|^2 d^2q / (2 pi)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre

from .errors import NoDonut


@dataclass(frozen=True)
class LaguerreGaussianMode:
    """Transverse pump mode LG_p^l.

    Give either ``w0`` or ``z_R``; the other is derived from
    ``z_R = pi w0**2 / wavelength``. ``wavelength`` is the wavelength in the
    medium the beam is focused into (for the pump inside the crystal this is
    ``2 pi / k_P``).
    """

    l: int
    p: int = 0
    w0: float | None = None
    wavelength: float = 351.1e-7
    z_R: float | None = None

    def __post_init__(self):
        if self.p < 0 or int(self.p) != self.p:
            raise ValueError(f"radial index p must be a nonnegative integer, got {self.p}")
        if int(self.l) != self.l:
            raise ValueError(f"charge l must be an integer, got {self.l}")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if self.w0 is None and self.z_R is None:
            raise ValueError("one of w0 or z_R is required")
        if self.w0 is None:
            if not self.z_R > 0:
                raise ValueError("z_R must be positive")
            object.__setattr__(self, "w0", math.sqrt(self.z_R * self.wavelength / math.pi))
        elif self.z_R is None:
            if not self.w0 > 0:
                raise ValueError("w0 must be positive")
            object.__setattr__(self, "z_R", math.pi * self.w0**2 / self.wavelength)
        else:
            expected = math.pi * self.w0**2 / self.wavelength
            if not self.w0 > 0 or abs(self.z_R - expected) > 1e-12 * expected:
                raise ValueError(f"w0={self.w0} and z_R={self.z_R} disagree (expected z_R={expected})")

    @property
    def norm(self) -> float:
        """Analytic constant making the transverse intensity integrate to one."""
        a = abs(self.l)
        return math.sqrt(2.0 * math.factorial(self.p) / (math.pi * math.factorial(self.p + a))) / self.w0


def _lg_profile(l, p, waist, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = abs(l)
    rho = 2.0 * (x**2 + y**2) / waist**2
    norm = math.sqrt(2.0 * math.factorial(p) / (math.pi * math.factorial(p + a))) / waist
    radial = rho ** (a / 2.0) * eval_genlaguerre(p, a, rho) * np.exp(-rho / 2.0)
    return norm * radial * np.exp(1j * l * np.arctan2(y, x))


def lg_field(mode: LaguerreGaussianMode, x, y):
    """Normalized waist-plane field, including the exp(i l phi) vortex phase."""
    return _lg_profile(mode.l, mode.p, mode.w0, x, y)


def lg_fourier(mode: LaguerreGaussianMode, qx, qy):
    """Closed-form 2-d Fourier transform of :func:`lg_field` (see module docstring)."""
    phase = (-1j) ** abs(mode.l) * (-1.0) ** mode.p
    return 2.0 * math.pi * phase * _lg_profile(mode.l, mode.p, 2.0 / mode.w0, qx, qy)


def donut_radius_q(mode: LaguerreGaussianMode) -> float:
    """Radius of maximum |lg_fourier|^2 for a p = 0 donut."""
    if mode.l == 0:
        raise NoDonut("l = 0 has no donut: the transform peaks at q = 0")
    if mode.p != 0:
        raise ValueError("donut radius is defined for p = 0 only")
    # |F|^2 ~ q^(2|l|) exp(-q^2 w0^2 / 2)
    return math.sqrt(2.0 * abs(mode.l)) / mode.w0


def fourier_extent(mode: LaguerreGaussianMode) -> float:
    """Radius beyond which |lg_fourier|^2 carries negligible (< ~1e-7) power."""
    order = 2 * mode.p + abs(mode.l) + 1
    t_max = order + 6.0 * math.sqrt(order) + 12.0
    return math.sqrt(2.0 * t_max) / mode.w0
