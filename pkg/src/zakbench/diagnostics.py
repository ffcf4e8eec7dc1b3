"""Norms, decay fits, Duhamel extraction, and the bootstrap monitor.

Everything here is read-only over trajectories.  Weighted norms use
box-centered |x| with no periodic unwrapping, so they are only
meaningful inside the trust window: the time span before wrapped-around
mass re-enters the measurement region (wave speed 1 and Schrodinger
group velocity 2|xi| both respected).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, GridRangeError, InsufficientDataError
from .fields import Field, Space, physical_field
from .model import PLUS, Parameters, _check_sign
from .spectral import (
    apply_multiplier,
    bessel_power_symbol,
    dft_forward,
    dft_inverse,
    half_wave_symbol,
    lambda_power_symbol,
    lp_weight,
    schrodinger_symbol,
    spatial_split,
)

__all__ = [
    "NormRequest",
    "norm",
    "lp_norm",
    "sobolev_norm",
    "besov_norm",
    "weighted_norm",
    "weighted_h1_norm",
    "TrustWindow",
    "trust_window",
    "mass_radius",
    "spectral_energy_radius",
    "duhamel_extract",
    "SplitPieces",
    "split_diagnostics",
    "DecayFit",
    "decay_fit",
    "XNormComponent",
    "XNormReport",
    "x_norm_report",
    "ScatteringReport",
    "scattering_monitor",
    "DispersiveCheck",
    "dispersive_check",
    "DIAGNOSTIC_COLUMNS",
    "snapshot_row",
    "format_row",
]


# ---------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class NormRequest:
    """A norm specification: Lp, Sobolev, Besov, or weighted L2.

    ``target`` is an informational selector (u, n, f, g+, g-, G+, ...)
    used by report builders; `norm` itself just evaluates the request on
    whatever field it is handed.
    """

    kind: str
    p: float = 2.0
    q: float = 2.0
    s: float = 0.0
    weight_power: int = 1
    prefactor: str = "1"
    target: str = ""

    def __post_init__(self):
        if self.kind not in ("lp", "sobolev", "besov", "weighted"):
            raise ContractViolation(f"unknown norm kind {self.kind!r}")
        if not (1.0 <= self.p):
            raise ContractViolation(f"p must be in [1, inf], got {self.p}")
        if not (1.0 <= self.q):
            raise ContractViolation(f"q must be in [1, inf], got {self.q}")
        if self.kind == "weighted" and self.weight_power not in (1, 2):
            raise ContractViolation(f"weight power must be 1 or 2, got {self.weight_power}")
        if self.prefactor not in ("1", "lambda"):
            raise ContractViolation(f"prefactor must be '1' or 'lambda', got {self.prefactor!r}")


def norm(f: Field, request: NormRequest) -> float:
    if request.kind == "lp":
        return lp_norm(f, request.p)
    if request.kind == "sobolev":
        return sobolev_norm(f, request.s)
    if request.kind == "besov":
        return besov_norm(f, request.s, request.p, request.q)
    return weighted_norm(f, request.weight_power, request.prefactor)


def _physical(f: Field) -> Field:
    return f if f.space == Space.PHYSICAL else dft_inverse(f)


def _spectral(f: Field) -> Field:
    return f if f.space == Space.SPECTRAL else dft_forward(f)


def lp_norm(f: Field, p: float = 2.0) -> float:
    """L^p norm by midpoint quadrature with cell weight dx^3."""
    g = _physical(f)
    mags = np.abs(g.values)
    if math.isinf(p):
        return float(mags.max())
    return float((np.sum(mags**p) * g.grid.cell_volume) ** (1.0 / p))


def sobolev_norm(f: Field, s: float) -> float:
    """H^s norm via the inhomogeneous multiplier (1 + |xi|^2)^(s/2)."""
    hat = _spectral(f)
    weighted = apply_multiplier(hat, bessel_power_symbol(s))
    return float(weighted.l2() * hat.grid.dx**1.5)


def besov_norm(f: Field, s: float, p: float, q: float) -> float:
    """Homogeneous Besov norm: l^q over 2^{sk} ||P_k f||_{L^p} on the
    grid's dyadic range."""
    grid = f.grid
    k_lo, k_hi = grid.dyadic_range
    if k_hi < k_lo:
        raise GridRangeError("grid supports no dyadic shells")
    hat = _spectral(f)
    terms = []
    for k in range(k_lo, k_hi + 1):
        w = lp_weight(grid, k, "at")
        shell = hat.with_values(w * hat.values)
        if p == 2.0:
            val = float(shell.l2() * grid.dx**1.5)
        else:
            val = lp_norm(dft_inverse(shell), p)
        terms.append((2.0 ** (s * k)) * val)
    arr = np.asarray(terms)
    if math.isinf(q):
        return float(arr.max())
    return float((arr**q).sum() ** (1.0 / q))


def weighted_norm(f: Field, power: int = 1, prefactor: str = "1") -> float:
    """|| Lambda^{0 or 1} ( |x|^power f ) ||_{L^2} with box-centered x."""
    if power not in (1, 2):
        raise ContractViolation(f"weight power must be 1 or 2, got {power}")
    g = _physical(f)
    weighted = g.with_values((g.grid.x_mag**power) * g.values)
    if prefactor == "lambda":
        hat = apply_multiplier(dft_forward(weighted), lambda_power_symbol(1.0))
        return float(hat.l2() * g.grid.dx**1.5)
    if prefactor != "1":
        raise ContractViolation(f"prefactor must be '1' or 'lambda', got {prefactor!r}")
    return lp_norm(weighted, 2.0)


def weighted_h1_norm(f: Field) -> float:
    """|| x f ||_{H^1} with the vector weight: sqrt(sum_j ||x_j f||_{H^1}^2)."""
    g = _physical(f)
    X, Y, Z = g.grid.xmesh()
    total = 0.0
    for coord in (X, Y, Z):
        total += sobolev_norm(g.with_values(coord * g.values), 1.0) ** 2
    return float(math.sqrt(total))


# ---------------------------------------------------------------------------
# trust window


@dataclass(frozen=True)
class TrustWindow:
    """Time span on which the periodic box emulates free space."""

    t_end: float
    mass_radius: float
    speed: float


def mass_radius(f: Field, quantile: float = 0.99) -> float:
    """Radius containing the given fraction of the field's L2 mass."""
    g = _physical(f)
    r = g.grid.x_mag.ravel()
    w = np.abs(g.values.ravel()) ** 2
    total = w.sum()
    if total <= 0.0:
        return 0.0
    order = np.argsort(r)
    cum = np.cumsum(w[order])
    idx = int(np.searchsorted(cum, quantile * total))
    return float(r[order][min(idx, r.size - 1)])


def spectral_energy_radius(f: Field, quantile: float = 0.99) -> float:
    """|xi| radius containing the given fraction of the spectral energy."""
    hat = _spectral(f)
    r = hat.grid.k_mag.ravel()
    w = np.abs(hat.values.ravel()) ** 2
    total = w.sum()
    if total <= 0.0:
        return 0.0
    order = np.argsort(r)
    cum = np.cumsum(w[order])
    idx = int(np.searchsorted(cum, quantile * total))
    return float(r[order][min(idx, r.size - 1)])


def trust_window(u0: Field, other_fields: tuple = (), speed: float | None = None) -> TrustWindow:
    """T_trust = (L/2 - R0)/v_max with v_max = max(1, 2 k_energy).

    R0 is the largest 99%-mass radius over the initial fields and
    k_energy the 99%-energy spectral radius of the envelope u0, so both
    the unit wave speed and the Schrodinger group velocity 2|xi| are
    respected (a zero envelope leaves only the wave speed).  ``speed``
    overrides v_max for checks of a single known propagator.
    """
    grid = u0.grid
    radius = mass_radius(u0)
    for f in other_fields:
        radius = max(radius, mass_radius(f))
    if speed is None:
        k99 = spectral_energy_radius(u0)
        speed = max(1.0, 2.0 * k99)
    t_end = max(0.0, (grid.length / 2.0 - radius) / speed)
    return TrustWindow(t_end=t_end, mass_radius=radius, speed=speed)


# ---------------------------------------------------------------------------
# Duhamel extraction and splittings


def duhamel_extract(traj, t: float) -> tuple:
    """Accumulated Duhamel integrals at a snapshot time.

    Returns (F_combined, G_plus, G_minus) where G_pm = i(g_pm(t) -
    g_pm(0)) and F_combined = f(t) - f(0) is the signed sum of the two
    Schrodinger-side integrals; the individual summands are not
    separable from trajectory data alone.
    """
    p_t = traj.profiles_at(t)
    p_0 = traj.profiles(0)
    f_comb = p_t.f - p_0.f
    g_plus = 1j * (p_t.g_plus - p_0.g_plus)
    g_minus = 1j * (p_t.g_minus - p_0.g_minus)
    return f_comb, g_plus, g_minus


@dataclass
class SplitPieces:
    """Quadrature reconstruction of one localized/far splitting.

    ``low`` and ``far`` are the two pieces at the final time (physical
    space); their sum approximates the full Duhamel integral G_pm.
    ``x2_low_series`` tracks ||x^2 (low piece)||_{L2} at every snapshot
    time, and ``lowfreq`` maps dyadic k to ||P_{<=k} far|| at the final
    time.
    """

    sign: int
    exponent: float
    times: np.ndarray
    low: Field
    far: Field
    x2_low_series: np.ndarray
    lowfreq: dict

    @property
    def total(self) -> Field:
        return self.low + self.far


def _free_schrodinger(f: Field, t: float) -> Field:
    return dft_inverse(apply_multiplier(dft_forward(f), schrodinger_symbol(t)))


def split_diagnostics(traj, t: float, exponent: float, sign: int = PLUS) -> SplitPieces:
    """Reconstruct the localized/far pieces of the wave-side Duhamel term.

    At each snapshot time s <= t the profile f is split at radius s^e;
    the bilinear integrand Lambda(e^{is D} f_a conj(e^{is D} f_b)) is
    formed from physical-space products of the propagated pieces, pulled
    back through e^{(sign) i s Lambda} (the factor that makes the pieces
    sum to the extracted integral i(g_pm(t) - g_pm(0)) for the half-wave
    dynamics dt g_pm = -i e^{(pm) it Lambda} Lambda |u|^2), and
    accumulated by trapezoidal quadrature.  exponent 1/8 groups the
    pieces as (at least one localized input, both inputs far); exponent
    1/4 groups them as (both inputs localized, at least one input far).
    """
    _check_sign(sign)
    if exponent not in (0.125, 0.25):
        raise ContractViolation(f"split exponent must be 1/8 or 1/4, got {exponent}")
    idx_end = traj.index_of(t)
    if idx_end < 2:
        raise InsufficientDataError("need at least 3 snapshots for the time quadrature")
    grid = traj.grid
    times = np.asarray(traj.times[: idx_end + 1])
    kmag = grid.k_mag
    # the integrator zeroes these modes after every nonlinear product, so
    # the reconstructed integrand must do the same to match the extract
    mask = grid.dealias_mask if traj.config.dealias else grid.nyquist_mask

    def integrands(j: int) -> tuple:
        """Spectral integrands of the four input pairings at snapshot j."""
        s = times[j]
        f = traj.profiles(j).f
        if s <= 0.0:
            low = f.with_values(np.zeros_like(f.values))
            high = f
        else:
            low, high = spatial_split(f, s**exponent)
        u_low = _free_schrodinger(low, s).values
        u_high = _free_schrodinger(high, s).values
        pull = np.exp(sign * 1j * s * kmag) * kmag

        def bilinear(a, b):
            hat = dft_forward(physical_field(grid, a * np.conj(b)))
            vals = hat.values.copy()
            vals[mask] = 0.0
            return pull * vals

        return (
            bilinear(u_low, u_low),
            bilinear(u_low, u_high),
            bilinear(u_high, u_low),
            bilinear(u_high, u_high),
        )

    acc = [np.zeros(grid.shape, dtype=np.complex128) for _ in range(4)]
    x2_series = np.zeros(times.size)

    if exponent == 0.125:
        low_of = lambda a: a[0] + a[1] + a[2]  # at least one localized input
        far_of = lambda a: a[3]
    else:
        low_of = lambda a: a[0]  # both inputs localized
        far_of = lambda a: a[1] + a[2] + a[3]

    prev = integrands(0)
    x2_series[0] = 0.0
    for j in range(1, times.size):
        cur = integrands(j)
        w = 0.5 * (times[j] - times[j - 1])
        for m in range(4):
            acc[m] += w * (prev[m] + cur[m])
        prev = cur
        low_phys = dft_inverse(Field(grid, low_of(acc), Space.SPECTRAL))
        x2_series[j] = weighted_norm(low_phys, 2)

    low_hat = Field(grid, low_of(acc), Space.SPECTRAL)
    far_hat = Field(grid, far_of(acc), Space.SPECTRAL)

    k_lo, k_hi = grid.dyadic_range
    lowfreq = {}
    for k in range(k_lo, k_hi + 1):
        w = lp_weight(grid, k, "below")
        masked = far_hat.with_values(w * far_hat.values)
        vals = masked.values.copy()
        vals[0, 0, 0] = 0.0  # the accumulated pieces are mean-free anyway
        lowfreq[k] = float(np.linalg.norm(vals.ravel()) * grid.dx**1.5)

    return SplitPieces(
        sign=sign,
        exponent=exponent,
        times=times,
        low=dft_inverse(low_hat),
        far=dft_inverse(far_hat),
        x2_low_series=x2_series,
        lowfreq=lowfreq,
    )


# ---------------------------------------------------------------------------
# decay fits


@dataclass(frozen=True)
class DecayFit:
    """Least-squares power law fit value ~ exp(intercept) * t^exponent."""

    exponent: float
    intercept: float
    window: tuple
    residual: float
    trust_window_end: float


def decay_fit(times, values, window: tuple, trust_window_end: float = math.inf) -> DecayFit:
    """Fit log(value) against log(t) on the given window.

    Requires at least 5 samples in the window, strictly positive values,
    and the window inside the trust window.
    """
    t0, t1 = window
    if not (t0 < t1):
        raise ContractViolation(f"empty fit window [{t0}, {t1}]")
    if t1 > trust_window_end * (1.0 + 1e-12):
        raise GridRangeError(f"fit window end {t1} exceeds trust window {trust_window_end}")
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    mask = (times >= t0) & (times <= t1)
    if mask.sum() < 5:
        raise InsufficientDataError(f"only {int(mask.sum())} samples in window, need at least 5")
    tt, vv = times[mask], values[mask]
    if np.any(vv <= 0.0):
        raise ContractViolation("decay fit requires strictly positive values")
    if np.any(tt <= 0.0):
        raise ContractViolation("decay fit requires strictly positive times")
    lt, lv = np.log(tt), np.log(vv)
    slope, intercept = np.polyfit(lt, lv, 1)
    resid = lv - (slope * lt + intercept)
    return DecayFit(
        exponent=float(slope),
        intercept=float(intercept),
        window=(float(t0), float(t1)),
        residual=float(np.sqrt(np.mean(resid**2))),
        trust_window_end=float(trust_window_end),
    )


# ---------------------------------------------------------------------------
# bootstrap (X-norm) monitor


@dataclass(frozen=True)
class XNormComponent:
    name: str
    weighted: float
    raw: float
    weight: float


@dataclass(frozen=True)
class XNormReport:
    t: float
    components: tuple
    bound: float | None

    @property
    def passed(self) -> bool:
        if self.bound is None:
            return True
        return all(c.weighted <= self.bound for c in self.components)

    def component(self, name: str) -> XNormComponent:
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self):
        out = []
        for c in self.components:
            status = ""
            if self.bound is not None:
                status = "PASS " if c.weighted <= self.bound else "FAIL "
            out.append(f"{status}{c.name} weighted={c.weighted:.12g} raw={c.raw:.12g}")
        return out


def x_norm_report(traj, t: float, params: Parameters, bound: float | None = None) -> XNormReport:
    """Evaluate every time-weighted component of the bootstrap norm at t.

    Components (s = params.sobolev_index, a = alpha, b = beta, d = delta):
    t^-d ||f||_{H^s}, t^-d ||x f||, t^{-1+2a+d} ||x^2 f||, ||g_pm||_{H^s},
    t ||w_pm||_{B^0_{inf,1}}, plus the wave-side Duhamel weights
    ||x G_pm||_{H^1} and t^-b ||Lambda x^2 G_pm||.
    """
    if t <= 0.0:
        raise ContractViolation("the time weights require t > 0")
    idx = traj.index_of(t)
    p = traj.profiles(idx)
    p0 = traj.profiles(0)
    s = params.sobolev_index
    d, a, b = params.delta, params.alpha, params.beta

    from .model import from_profiles

    _, hw = from_profiles(p)
    g_pm = (p.g_plus, p.g_minus)
    w_pm = (hw.w_plus, hw.w_minus)
    big_g = (1j * (p.g_plus - p0.g_plus), 1j * (p.g_minus - p0.g_minus))

    comps = [
        XNormComponent("f_sobolev", t ** (-d) * sobolev_norm(p.f, s + 1), sobolev_norm(p.f, s + 1), t ** (-d)),
        XNormComponent("xf_l2", t ** (-d) * weighted_norm(p.f, 1), weighted_norm(p.f, 1), t ** (-d)),
        XNormComponent(
            "x2f_l2",
            t ** (-1.0 + 2.0 * a + d) * weighted_norm(p.f, 2),
            weighted_norm(p.f, 2),
            t ** (-1.0 + 2.0 * a + d),
        ),
        XNormComponent(
            "g_sobolev",
            max(sobolev_norm(g_pm[0], s), sobolev_norm(g_pm[1], s)),
            max(sobolev_norm(g_pm[0], s), sobolev_norm(g_pm[1], s)),
            1.0,
        ),
        XNormComponent(
            "w_besov",
            t * max(besov_norm(w_pm[0], 0.0, math.inf, 1.0), besov_norm(w_pm[1], 0.0, math.inf, 1.0)),
            max(besov_norm(w_pm[0], 0.0, math.inf, 1.0), besov_norm(w_pm[1], 0.0, math.inf, 1.0)),
            t,
        ),
        XNormComponent(
            "xG_h1",
            max(weighted_h1_norm(big_g[0]), weighted_h1_norm(big_g[1])),
            max(weighted_h1_norm(big_g[0]), weighted_h1_norm(big_g[1])),
            1.0,
        ),
        XNormComponent(
            "lam_x2G_l2",
            t ** (-b) * max(weighted_norm(big_g[0], 2, "lambda"), weighted_norm(big_g[1], 2, "lambda")),
            max(weighted_norm(big_g[0], 2, "lambda"), weighted_norm(big_g[1], 2, "lambda")),
            t ** (-b),
        ),
    ]
    return XNormReport(t=t, components=tuple(comps), bound=bound)


# ---------------------------------------------------------------------------
# scattering monitor


@dataclass(frozen=True)
class ScatteringReport:
    times: np.ndarray
    f_increments: np.ndarray
    g_plus_increments: np.ndarray
    g_minus_increments: np.ndarray
    nonincreasing: bool

    SLACK = 1.2


def scattering_monitor(traj, tail_start: float) -> ScatteringReport:
    """Cauchy increments of the profiles over the trajectory tail.

    The summary flag checks that the f-increments are nonincreasing
    within 20% slack, the footprint of profile convergence.
    """
    idx = [i for i, s in enumerate(traj.times) if s >= tail_start - 1e-12]
    if len(idx) < 3:
        raise InsufficientDataError(
            f"need at least 3 snapshots after t = {tail_start}, found {len(idx)}"
        )
    f_inc, gp_inc, gm_inc, mids = [], [], [], []
    scale = 0.0
    for i_prev, i_next in zip(idx[:-1], idx[1:]):
        p_a, p_b = traj.profiles(i_prev), traj.profiles(i_next)
        scale = max(scale, lp_norm(p_a.f, 2.0))
        f_inc.append(lp_norm(p_b.f - p_a.f, 2.0))
        gp_inc.append(lp_norm(p_b.g_plus - p_a.g_plus, 2.0))
        gm_inc.append(lp_norm(p_b.g_minus - p_a.g_minus, 2.0))
        mids.append(traj.times[i_next])
    f_arr = np.asarray(f_inc)
    # increments at the round-off floor are constant profiles, not growth
    floor = 1e-14 * scale
    ok = bool(np.all(f_arr[1:] <= ScatteringReport.SLACK * f_arr[:-1] + floor))
    return ScatteringReport(
        times=np.asarray(mids),
        f_increments=f_arr,
        g_plus_increments=np.asarray(gp_inc),
        g_minus_increments=np.asarray(gm_inc),
        nonincreasing=ok,
    )


# ---------------------------------------------------------------------------
# linear dispersive checks


@dataclass(frozen=True)
class DispersiveCheck:
    kind: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        return self.lhs / self.rhs

    @property
    def flat_within(self) -> float:
        """Largest relative deviation of the ratio from its mean."""
        r = self.ratios
        return float(np.max(np.abs(r - r.mean())) / r.mean())


_DISPERSIVE_KINDS = ("schrodinger_linf", "schrodinger_l6", "wave_besov", "wave_lp")


def dispersive_check(kind: str, data: Field, times, enforce_trust: bool = True) -> DispersiveCheck:
    """Measured decay against the linear dispersive bound shapes.

    schrodinger_linf: ||e^{it D} f||_inf      vs t^{-3/2} ||xf||^{1/2} ||x^2 f||^{1/2}
    schrodinger_l6:   ||e^{it D} f||_6        vs t^{-1} ||xf||
    wave_besov:       ||e^{it L} h||_{B^0_{inf,1}} vs t^{-1} ||h||_{B^2_{1,1}}
    wave_lp (p=inf):  ||e^{it L} h||_inf      vs t^{-1} ||Lambda^2 h||_1

    The returned ratios should be bounded and roughly flat in t; the
    constant itself is recorded, not asserted.
    """
    if kind not in _DISPERSIVE_KINDS:
        raise ContractViolation(f"unknown dispersive check {kind!r}")
    times = np.asarray(sorted(float(t) for t in times))
    if np.any(times <= 0.0):
        raise ContractViolation("dispersive checks need strictly positive times")
    if enforce_trust:
        # the half-wave group speed is exactly 1; the Schrodinger group
        # speed is 2|xi| over the data's occupied frequencies
        tw = trust_window(data, speed=1.0 if kind.startswith("wave") else None)
        if times.max() > tw.t_end * (1.0 + 1e-12):
            raise GridRangeError(
                f"requested time {times.max():.3g} exceeds trust window {tw.t_end:.3g}"
            )

    hat = dft_forward(_physical(data))
    lhs, rhs = [], []
    if kind in ("schrodinger_linf", "schrodinger_l6"):
        xf = weighted_norm(data, 1)
        x2f = weighted_norm(data, 2)
        for t in times:
            evol = dft_inverse(apply_multiplier(hat, schrodinger_symbol(t)))
            if kind == "schrodinger_linf":
                lhs.append(lp_norm(evol, math.inf))
                rhs.append(t ** (-1.5) * math.sqrt(xf * x2f))
            else:
                lhs.append(lp_norm(evol, 6.0))
                rhs.append(xf / t)
    else:
        if kind == "wave_besov":
            size = besov_norm(data, 2.0, 1.0, 1.0)
        else:
            lam2 = dft_inverse(apply_multiplier(hat, lambda_power_symbol(2.0)))
            size = lp_norm(lam2, 1.0)
        for t in times:
            evol = dft_inverse(apply_multiplier(hat, half_wave_symbol(t, PLUS)))
            if kind == "wave_besov":
                lhs.append(besov_norm(evol, 0.0, math.inf, 1.0))
            else:
                lhs.append(lp_norm(evol, math.inf))
            rhs.append(size / t)
    return DispersiveCheck(kind=kind, times=times, lhs=np.asarray(lhs), rhs=np.asarray(rhs))


# ---------------------------------------------------------------------------
# per-snapshot diagnostics rows

DIAGNOSTIC_COLUMNS = (
    "t",
    "mass",
    "linf_u",
    "linf_n",
    "l6_u",
    "hs_u",
    "hs_g",
    "besov_n",
    "xf_l2",
    "x2f_l2",
    "xG_h1",
    "lam_x2G_l2",
    "cauchy_f",
)


def snapshot_row(traj, i: int) -> dict:
    """Diagnostics row for snapshot i of a trajectory."""
    state = traj.states[i]
    p = traj.profiles(i)
    p0 = traj.profiles(0)
    s = traj.params.sobolev_index
    g_plus_d = 1j * (p.g_plus - p0.g_plus)
    row = {
        "t": state.t,
        "mass": lp_norm(state.u, 2.0),
        "linf_u": state.u.linf(),
        "linf_n": float(np.max(np.abs(state.n.values.real + state.n_mean))),
        "l6_u": lp_norm(state.u, 6.0),
        "hs_u": sobolev_norm(state.u, s),
        "hs_g": sobolev_norm(p.g_plus, s),
        "besov_n": besov_norm(state.n, 0.0, math.inf, 1.0),
        "xf_l2": weighted_norm(p.f, 1),
        "x2f_l2": weighted_norm(p.f, 2),
        "xG_h1": weighted_h1_norm(g_plus_d),
        "lam_x2G_l2": weighted_norm(g_plus_d, 2, "lambda"),
        "cauchy_f": lp_norm(p.f - traj.profiles(i - 1).f, 2.0) if i > 0 else None,
    }
    return row


def format_row(row: dict) -> str:
    """Fixed-order CSV line, 17 significant digits, empty for missing."""
    cells = []
    for col in DIAGNOSTIC_COLUMNS:
        v = row.get(col)
        cells.append("" if v is None else f"{v:.17g}")
    return ",".join(cells)
