"""Transforms, Fourier multipliers, dyadic projections, spatial cutoffs.

Conventions fixed here and relied on everywhere else:

* DFTs are unitary (norm="ortho"), so Parseval holds at machine
  precision and every unimodular symbol is an exact l2 isometry.
* Lambda = sqrt(-Laplacian) has symbol |xi|; e^{it*Laplacian} has symbol
  exp(-i t |xi|^2); e^{s*i*t*Lambda} has symbol exp(s*i*t*|xi|).
* Negative powers of Lambda and the Riesz symbols map the zero mode to
  0; callers that need the physical zero mode track it separately.
"""

from __future__ import annotations

import numpy as np
import scipy.fft

from .errors import CutoffExceedsBoxError, GridRangeError, SingularSymbolError
from .fields import Field, Space
from .grid import Grid, fft_workers

__all__ = [
    "dft_forward",
    "dft_inverse",
    "apply_multiplier",
    "lambda_power_symbol",
    "bessel_power_symbol",
    "riesz_symbol",
    "schrodinger_symbol",
    "half_wave_symbol",
    "lp_weight",
    "lp_project",
    "spatial_split",
    "smooth_transition",
    "radial_bump",
]


# ---------------------------------------------------------------------------
# transforms


def dft_forward(f: Field) -> Field:
    """Unitary forward DFT of a physical-space field."""
    f.require(Space.PHYSICAL)
    out = scipy.fft.fftn(f.values, norm="ortho", workers=fft_workers())
    return Field(f.grid, out, Space.SPECTRAL)


def dft_inverse(f: Field) -> Field:
    """Unitary inverse DFT of a spectral-space field."""
    f.require(Space.SPECTRAL)
    out = scipy.fft.ifftn(f.values, norm="ortho", workers=fft_workers())
    return Field(f.grid, out, Space.PHYSICAL)


# ---------------------------------------------------------------------------
# multipliers


def apply_multiplier(f: Field, symbol, zero_mode: complex | None = None) -> Field:
    """Pointwise multiply a spectral field by symbol(kx, ky, kz).

    ``symbol`` receives broadcastable wavenumber arrays and must return
    finite values at every grid wavenumber; a non-finite value is only
    tolerated at xi = 0 when ``zero_mode`` overrides it explicitly.
    """
    f.require(Space.SPECTRAL)
    kx, ky, kz = f.grid.kmesh()
    with np.errstate(divide="ignore", invalid="ignore"):
        sym = np.asarray(symbol(kx, ky, kz), dtype=np.complex128)
    sym = np.broadcast_to(sym, f.grid.shape).copy()
    if zero_mode is not None:
        sym[0, 0, 0] = zero_mode
    bad = ~np.isfinite(sym)
    if np.any(bad):
        idx = tuple(int(i[0]) for i in np.nonzero(bad))
        raise SingularSymbolError(f"symbol is non-finite at grid wavenumber index {idx}")
    return Field(f.grid, sym * f.values, Space.SPECTRAL)


def lambda_power_symbol(s: float):
    """Symbol |xi|^s of Lambda^s; the zero mode maps to 0 unless s = 0."""

    def sym(kx, ky, kz):
        mag = np.sqrt(kx**2 + ky**2 + kz**2)
        if s == 0:
            return np.ones_like(mag)
        with np.errstate(divide="ignore"):
            out = mag**s
        if s < 0:
            out = np.where(mag == 0.0, 0.0, out)
        return out

    return sym


def bessel_power_symbol(s: float):
    """Symbol (1 + |xi|^2)^(s/2) of the inhomogeneous derivative weight."""

    def sym(kx, ky, kz):
        return (1.0 + kx**2 + ky**2 + kz**2) ** (s / 2.0)

    return sym


def riesz_symbol(j: int):
    """Riesz symbol xi_j/|xi| with zero mode 0 (j in {0, 1, 2})."""
    if j not in (0, 1, 2):
        raise ValueError(f"axis index must be 0, 1 or 2, got {j}")

    def sym(kx, ky, kz):
        mag = np.sqrt(kx**2 + ky**2 + kz**2)
        comp = np.broadcast_to((kx, ky, kz)[j], mag.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = comp / mag
        return np.where(mag == 0.0, 0.0, out)

    return sym


def schrodinger_symbol(t: float):
    """Symbol exp(-i t |xi|^2) of the free propagator e^{it*Laplacian}."""

    def sym(kx, ky, kz):
        return np.exp(-1j * t * (kx**2 + ky**2 + kz**2))

    return sym


def half_wave_symbol(t: float, sign: int):
    """Symbol exp(sign * i t |xi|) of the half-wave propagator e^{sign*it*Lambda}."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")

    def sym(kx, ky, kz):
        return np.exp(sign * 1j * t * np.sqrt(kx**2 + ky**2 + kz**2))

    return sym


# ---------------------------------------------------------------------------
# smooth cutoffs


def smooth_transition(t: np.ndarray) -> np.ndarray:
    """C-infinity monotone step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        a = np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + b)


def radial_bump(r: np.ndarray) -> np.ndarray:
    """Smooth radial bump: 1 on r <= 1, 0 on r >= 2, monotone between."""
    return smooth_transition(2.0 - np.asarray(r, dtype=np.float64))


# ---------------------------------------------------------------------------
# Littlewood-Paley projections


def lp_weight(grid: Grid, k: int, mode: str = "at") -> np.ndarray:
    """Multiplier weight of the dyadic projection P_k / P_<=k / P_>k.

    The zero mode belongs to no dyadic scale and is excluded from every
    projection, so on mean-free fields the shell weights ("at")
    telescope to the identity and P_<=k + P_>k is the identity; on a
    general field both reconstruct the field minus its mean.  The
    below-range tail is folded into the bottom shell and the above-range
    tail into the top shell, so the grid's finitely many shells still
    form an exact partition.
    """
    k_lo, k_hi = grid.dyadic_range
    if not (k_lo <= k <= k_hi):
        raise GridRangeError(f"dyadic index {k} outside grid range [{k_lo}, {k_hi}]")
    mag = grid.k_mag

    def theta(j: int) -> np.ndarray:
        # cumulative profile: 1 for |xi| <= 2^j, 0 for |xi| >= 2^(j+1)
        return radial_bump(mag / float(2.0**j))

    if mode == "below":
        w = np.ones_like(mag) if k == k_hi else theta(k).copy()
    elif mode == "above":
        w = np.zeros_like(mag) if k == k_hi else 1.0 - theta(k)
    elif mode == "at":
        if k == k_lo:
            w = theta(k).copy()
        elif k == k_hi:
            w = 1.0 - theta(k - 1)
        else:
            w = theta(k) - theta(k - 1)
    else:
        raise ValueError(f"unknown projection mode {mode!r}")
    w[0, 0, 0] = 0.0
    return w


def lp_project(f: Field, k: int, mode: str = "at") -> Field:
    """Littlewood-Paley projection onto frequencies |xi| ~ 2^k.

    Accepts a field in either space and returns one in the same space.
    """
    w = lp_weight(f.grid, k, mode)
    if f.space == Space.SPECTRAL:
        return Field(f.grid, w * f.values, Space.SPECTRAL)
    hat = dft_forward(f)
    return dft_inverse(Field(f.grid, w * hat.values, Space.SPECTRAL))


# ---------------------------------------------------------------------------
# spatial splitting


def spatial_split(f: Field, cutoff: float) -> tuple:
    """Split f into a piece near the origin and its complement.

    Returns (f_low, f_high) with f_low = f * rho(x/cutoff) supported in
    |x| <= 2*cutoff, f_high vanishing on |x| <= cutoff, and
    f_low + f_high = f exactly.
    """
    f.require(Space.PHYSICAL)
    if not cutoff > 0.0:
        raise CutoffExceedsBoxError(f"cutoff radius must be positive, got {cutoff}")
    if cutoff >= f.grid.length / 2.0:
        raise CutoffExceedsBoxError(
            f"cutoff radius {cutoff} does not fit inside the box of half-length "
            f"{f.grid.length / 2.0}"
        )
    rho = radial_bump(f.grid.x_mag / cutoff)
    low = Field(f.grid, rho * f.values, Space.PHYSICAL)
    high = Field(f.grid, f.values - low.values, Space.PHYSICAL)
    return low, high
