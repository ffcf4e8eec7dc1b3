"""Periodic cubic grids and their wavenumber bookkeeping.

The box is [-L/2, L/2)^3 sampled at n points per axis, and the discrete
wavenumbers are 2*pi*m/L for m in [-n/2, n/2).  Everything downstream
(transforms, multipliers, projections) reads its geometry from here.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Grid", "fft_workers"]


def fft_workers() -> int:
    """Worker-thread count for the FFT backend, capped by ZAK_THREADS."""
    cap = os.environ.get("ZAK_THREADS")
    avail = os.cpu_count() or 1
    if cap is not None:
        try:
            return max(1, min(int(cap), avail))
        except ValueError:
            return 1
    return min(avail, 4)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the centered cube of side ``length``.

    n must be even so the wavenumber set is {2*pi*m/L : m in [-n/2, n/2)},
    symmetric under negation except for the unpaired Nyquist mode.
    """

    n: int
    length: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n <= 0 or self.n % 2 != 0:
            raise ValueError(f"grid size must be a positive even integer, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"box length must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple:
        return (self.n, self.n, self.n)

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    @property
    def x1d(self) -> np.ndarray:
        """Per-axis coordinates -L/2 + j*dx, j = 0..n-1."""
        if "x1d" not in self._cache:
            self._cache["x1d"] = -0.5 * self.length + self.dx * np.arange(self.n)
        return self._cache["x1d"]

    @property
    def k1d(self) -> np.ndarray:
        """Per-axis wavenumbers in FFT ordering."""
        if "k1d" not in self._cache:
            self._cache["k1d"] = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        return self._cache["k1d"]

    def xmesh(self):
        """Broadcastable (sparse) coordinate arrays (X, Y, Z)."""
        x = self.x1d
        return np.meshgrid(x, x, x, indexing="ij", sparse=True)

    def kmesh(self):
        """Broadcastable (sparse) wavenumber arrays (KX, KY, KZ)."""
        k = self.k1d
        return np.meshgrid(k, k, k, indexing="ij", sparse=True)

    @property
    def k_mag(self) -> np.ndarray:
        """|xi| at every grid wavenumber, shape (n, n, n)."""
        if "k_mag" not in self._cache:
            kx, ky, kz = self.kmesh()
            self._cache["k_mag"] = np.sqrt(kx**2 + ky**2 + kz**2)
        return self._cache["k_mag"]

    @property
    def x_mag(self) -> np.ndarray:
        """Box-centered |x| at every grid point, shape (n, n, n)."""
        if "x_mag" not in self._cache:
            X, Y, Z = self.xmesh()
            self._cache["x_mag"] = np.sqrt(X**2 + Y**2 + Z**2)
        return self._cache["x_mag"]

    @property
    def k_fundamental(self) -> float:
        """Smallest nonzero |xi| component, 2*pi/L."""
        return 2.0 * np.pi / self.length

    @property
    def k_max(self) -> float:
        """Largest |xi| component, pi*n/L (the Nyquist wavenumber)."""
        return np.pi * self.n / self.length

    @property
    def dyadic_range(self) -> tuple:
        """Inclusive dyadic index range [k_min, k_max] supported by the grid.

        Shells below k_min and above k_max are folded into the end
        projections so the dyadic partition still sums to the identity.
        """
        k_lo = math.ceil(math.log2(self.k_fundamental)) - 2
        k_hi = math.ceil(math.log2(self.k_max))
        return (k_lo, k_hi)

    @property
    def nyquist_mask(self) -> np.ndarray:
        """True on modes with a Nyquist component on any axis."""
        if "nyq" not in self._cache:
            kx, ky, kz = self.kmesh()
            lim = self.k_max
            self._cache["nyq"] = (np.abs(kx) >= lim) | (np.abs(ky) >= lim) | (np.abs(kz) >= lim)
        return self._cache["nyq"]

    @property
    def dealias_mask(self) -> np.ndarray:
        """True on modes removed by the 2/3 rule."""
        if "dealias" not in self._cache:
            kx, ky, kz = self.kmesh()
            lim = (2.0 / 3.0) * self.k_max
            self._cache["dealias"] = (np.abs(kx) > lim) | (np.abs(ky) > lim) | (np.abs(kz) > lim)
        return self._cache["dealias"]

    def __eq__(self, other):
        return isinstance(other, Grid) and self.n == other.n and self.length == other.length

    def __hash__(self):
        return hash((self.n, self.length))
