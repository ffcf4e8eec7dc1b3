"""State representations and the bilinear-phase algebra of the system.

The coupled Schrodinger/wave system is carried in three equivalent
forms: physical variables (u, n, dt n), half-wave fields
w_pm = Lambda^{-1}(i dt pm Lambda) n, and profiles
(f, g_pm) = (e^{-it Laplacian} u, e^{pm it Lambda} w_pm) with the free
flow factored out.  The quadratic interactions are governed by the
bilinear phases

    phi_pm(xi, eta) = 2 xi.eta - |eta|^2 pm |eta|
    psi_pm(xi, eta) = -(pm)|xi| - |xi|^2 + 2 xi.eta

whose stationary sets (time resonances T, space resonances S, and
their intersection R) are located numerically by `resonance_scan`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, GridRangeError, SingularDirectionError
from .fields import Field, Space, physical_field, real_part, zero_field
from .grid import Grid
from .spectral import (
    apply_multiplier,
    dft_forward,
    dft_inverse,
    half_wave_symbol,
    lambda_power_symbol,
    schrodinger_symbol,
)

__all__ = [
    "State",
    "HalfWave",
    "ProfilePair",
    "Parameters",
    "PLUS",
    "MINUS",
    "to_halfwave",
    "from_halfwave",
    "to_profiles",
    "from_profiles",
    "state_from_profiles",
    "phase_phi",
    "phase_psi",
    "grad_eta_phi",
    "grad_xi_phi",
    "grad_eta_psi",
    "grad_xi_psi",
    "null_identity_psi_residual",
    "null_identity_phi_residual",
    "ResonanceScan",
    "resonance_scan",
    "ParameterCheck",
    "ParameterReport",
    "validate_parameters",
]

PLUS = 1
MINUS = -1

_MEAN_TOL = 1e-10


def _check_sign(sign: int) -> int:
    if sign not in (PLUS, MINUS):
        raise ContractViolation(f"phase sign must be +1 or -1, got {sign!r}")
    return sign


# ---------------------------------------------------------------------------
# state containers


@dataclass(frozen=True)
class State:
    """Physical variables (u, n, dt n) at one time stamp.

    n and n_t are zero-mean real fields; their spatial means are carried
    separately because the half-wave change of variables is only defined
    on the mean-free part.
    """

    u: Field
    n: Field
    n_t: Field
    n_mean: float = 0.0
    n_t_mean: float = 0.0
    t: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def validate(self, rel_tol: float = _MEAN_TOL) -> None:
        real_part(self.n, rel_tol)
        real_part(self.n_t, rel_tol)
        for name, f in (("n", self.n), ("n_t", self.n_t)):
            scale = max(f.linf(), 1e-300)
            if abs(f.mean()) > rel_tol * scale:
                raise ContractViolation(f"{name} is not zero-mean (mean {f.mean():.3e})")

    def is_finite(self) -> bool:
        return self.u.is_finite() and self.n.is_finite() and self.n_t.is_finite()


@dataclass(frozen=True)
class HalfWave:
    """Half-wave pair w_pm = i Lambda^{-1} n_t pm n (mean-free part)."""

    w_plus: Field
    w_minus: Field
    t: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.w_plus.grid

    def validate(self, rel_tol: float = _MEAN_TOL) -> None:
        """conj(w_pm) = -w_mp encodes that n and n_t are real."""
        scale = max(self.w_plus.linf(), self.w_minus.linf(), 1e-300)
        residue = float(np.max(np.abs(np.conj(self.w_plus.values) + self.w_minus.values)))
        if residue > rel_tol * scale:
            raise ContractViolation(
                f"half-wave reality pairing violated: residue {residue / scale:.3e}"
            )


@dataclass(frozen=True)
class ProfilePair:
    """Profiles (f, g_pm) with the free flow factored out.

    mean_n0 and mean_nt0 are the conserved zero modes of (n, n_t); the
    mean of n at time t is mean_n0 + t*mean_nt0 exactly, since the wave
    forcing has zero mean.
    """

    f: Field
    g_plus: Field
    g_minus: Field
    t: float = 0.0
    mean_n0: float = 0.0
    mean_nt0: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.f.grid

    def n_mean_at(self, t: float) -> float:
        return self.mean_n0 + t * self.mean_nt0


# ---------------------------------------------------------------------------
# conversions


def _zero_mean_spectral(f: Field) -> Field:
    """Forward transform with the zero mode removed."""
    hat = dft_forward(f)
    vals = hat.values.copy()
    vals[0, 0, 0] = 0.0
    return hat.with_values(vals)


def to_halfwave(state: State) -> HalfWave:
    """w_pm = i Lambda^{-1} n_t pm n on the mean-free fields."""
    state.validate()
    n_hat = _zero_mean_spectral(state.n)
    nt_hat = _zero_mean_spectral(state.n_t)
    lam_inv_nt = apply_multiplier(nt_hat, lambda_power_symbol(-1.0))
    wp_hat = 1j * lam_inv_nt.values + n_hat.values
    wm_hat = 1j * lam_inv_nt.values - n_hat.values
    grid = state.grid
    w_plus = dft_inverse(Field(grid, wp_hat, Space.SPECTRAL))
    w_minus = dft_inverse(Field(grid, wm_hat, Space.SPECTRAL))
    return HalfWave(w_plus, w_minus, t=state.t)


def from_halfwave(hw: HalfWave, means: tuple = (0.0, 0.0), u: Field | None = None) -> State:
    """Invert the half-wave map: n = (w+ - w-)/2, n_t = -i Lambda (w+ + w-)/2.

    The reconstructed fields must be real up to tolerance; ``means``
    supplies the separately tracked zero modes and ``u`` the envelope
    (zero if omitted).
    """
    grid = hw.grid
    n_vals = 0.5 * (hw.w_plus.values - hw.w_minus.values)
    sum_hat = dft_forward(Field(grid, hw.w_plus.values + hw.w_minus.values, Space.PHYSICAL))
    nt_hat = apply_multiplier(sum_hat, lambda_power_symbol(1.0))
    nt_vals = dft_inverse(nt_hat.with_values(-0.5j * nt_hat.values)).values

    n = physical_field(grid, real_part(physical_field(grid, n_vals)).astype(np.complex128))
    n_t = physical_field(grid, real_part(physical_field(grid, nt_vals)).astype(np.complex128))
    if u is None:
        u = zero_field(grid)
    return State(u=u, n=n, n_t=n_t, n_mean=means[0], n_t_mean=means[1], t=hw.t)


def to_profiles(state: State) -> ProfilePair:
    """Factor out the free flows at the state's own time stamp."""
    hw = to_halfwave(state)
    t = state.t
    f = dft_inverse(apply_multiplier(dft_forward(state.u), schrodinger_symbol(-t)))
    g_plus = dft_inverse(apply_multiplier(dft_forward(hw.w_plus), half_wave_symbol(t, PLUS)))
    g_minus = dft_inverse(apply_multiplier(dft_forward(hw.w_minus), half_wave_symbol(t, MINUS)))
    return ProfilePair(
        f=f,
        g_plus=g_plus,
        g_minus=g_minus,
        t=t,
        mean_n0=state.n_mean - t * state.n_t_mean,
        mean_nt0=state.n_t_mean,
    )


def from_profiles(p: ProfilePair) -> tuple:
    """Reconstruct (u, HalfWave) at the pair's time stamp."""
    t = p.t
    u = dft_inverse(apply_multiplier(dft_forward(p.f), schrodinger_symbol(t)))
    w_plus = dft_inverse(apply_multiplier(dft_forward(p.g_plus), half_wave_symbol(t, MINUS)))
    w_minus = dft_inverse(apply_multiplier(dft_forward(p.g_minus), half_wave_symbol(t, PLUS)))
    return u, HalfWave(w_plus, w_minus, t=t)


def state_from_profiles(p: ProfilePair) -> State:
    u, hw = from_profiles(p)
    means = (p.n_mean_at(p.t), p.mean_nt0)
    state = from_halfwave(hw, means=means, u=u)
    return state


# ---------------------------------------------------------------------------
# bilinear phases and null identities


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


def _norm(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(a * a, axis=-1))


def _as_points(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.shape[-1] != 3:
        raise ContractViolation(f"expected 3-vectors, got trailing dimension {a.shape[-1]}")
    return a


def phase_phi(xi, eta, sign: int):
    """phi_pm(xi, eta) = 2 xi.eta - |eta|^2 pm |eta|."""
    _check_sign(sign)
    xi, eta = _as_points(xi), _as_points(eta)
    return 2.0 * _dot(xi, eta) - _dot(eta, eta) + sign * _norm(eta)


def phase_psi(xi, eta, sign: int):
    """psi_pm(xi, eta) = -(pm)|xi| - |xi|^2 + 2 xi.eta."""
    _check_sign(sign)
    xi, eta = _as_points(xi), _as_points(eta)
    return -sign * _norm(xi) - _dot(xi, xi) + 2.0 * _dot(xi, eta)


def _unit(v: np.ndarray, what: str) -> np.ndarray:
    mag = _norm(v)
    if np.any(mag == 0.0):
        raise SingularDirectionError(f"{what} = 0 has no direction")
    return v / mag[..., None]


def grad_eta_phi(xi, eta, sign: int):
    """grad_eta phi_pm = 2 xi - 2 eta pm eta/|eta| (undefined at eta = 0)."""
    _check_sign(sign)
    xi, eta = _as_points(xi), _as_points(eta)
    return 2.0 * xi - 2.0 * eta + sign * _unit(eta, "eta")


def grad_xi_phi(xi, eta, sign: int):
    """The xi-gradient of phi in its null-decomposition convention, -2 eta.

    Note the printed first form of phi gives +2 eta by direct expansion;
    the -2 eta convention is the one under which the decomposition along
    eta/|eta| (see `null_identity_phi_residual`) is exact, and is kept
    here so the identity suite tests the decomposition as written.
    """
    _check_sign(sign)
    _ = _as_points(xi)
    eta = _as_points(eta)
    return -2.0 * eta


def grad_eta_psi(xi, eta, sign: int):
    """grad_eta psi_pm = 2 xi."""
    _check_sign(sign)
    xi = _as_points(xi)
    _ = _as_points(eta)
    return 2.0 * xi


def grad_xi_psi(xi, eta, sign: int):
    """grad_xi psi_pm = -(pm) xi/|xi| - 2 xi + 2 eta (undefined at xi = 0)."""
    _check_sign(sign)
    xi, eta = _as_points(xi), _as_points(eta)
    return -sign * _unit(xi, "xi") - 2.0 * xi + 2.0 * eta


def null_identity_psi_residual(xi, eta, sign: int):
    """|xi| - (1/2)(xi/|xi|) . grad_eta psi_pm; identically zero.

    The wave-type nonlinearity carries the symbol |xi|, and this identity
    trades it for the eta-gradient of the phase, so its exact vanishing
    is what makes the quadratic term null on the space-resonant set.
    """
    _check_sign(sign)
    xi, eta = _as_points(xi), _as_points(eta)
    xhat = _unit(xi, "xi")
    return _norm(xi) - 0.5 * _dot(xhat, grad_eta_psi(xi, eta, sign))


def null_identity_phi_residual(xi, eta, sign: int):
    """grad_xi phi minus its decomposition along eta/|eta|; zero vector.

    The decomposition reads

        grad_xi phi = 2 (eta/|eta|) ((eta/|eta|) . grad_eta phi)
                      - 2 (phi/|eta|) (eta/|eta|)

    with grad_xi phi taken in the -2 eta convention (see `grad_xi_phi`);
    in this pairing of signs the identity is exact for all eta != 0.
    """
    _check_sign(sign)
    xi, eta = _as_points(xi), _as_points(eta)
    ehat = _unit(eta, "eta")
    ge = grad_eta_phi(xi, eta, sign)
    ph = phase_phi(xi, eta, sign)
    mag = _norm(eta)
    decomposition = 2.0 * ehat * _dot(ehat, ge)[..., None] - 2.0 * (ph / mag)[..., None] * ehat
    return grad_xi_phi(xi, eta, sign) - decomposition


# ---------------------------------------------------------------------------
# resonance scan


@dataclass(frozen=True)
class ResonanceScan:
    """Point clouds of the time/space/fully-resonant sets of one phase.

    Points are rows (xi1, xi2, xi3, eta1, eta2, eta3) restricted to the
    rotation-reduced slice xi || e1, eta in span(e1, e2): both phases and
    all their gradient magnitudes depend on (xi, eta) only through
    |xi|, |eta| and xi.eta, so every orbit of the rotation group has a
    representative in the slice.
    """

    phase: str
    sign: int
    extent: float
    resolution: int
    cell: float
    time_set: np.ndarray
    space_set: np.ndarray
    resonant_set: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("xi1,xi2,xi3,eta1,eta2,eta3,set_tag\n")
            for tag, cloud in (("T", self.time_set), ("S", self.space_set), ("R", self.resonant_set)):
                for row in cloud:
                    coords = ",".join(f"{v:.17g}" for v in row)
                    fh.write(f"{coords},{tag}\n")


# Space-set acceptance scales for phi, in cells.  The generic rule
# |grad_eta phase| <= c h ||D grad_eta phase|| breaks down for phi near
# the eta = 0 plane (the unit-vector term makes the local Lipschitz
# bound blow up, admitting points far from the true set), so membership
# is tested on the exact structure instead: grad_eta phi vanishes iff
# |2(xi - eta)| = 1 and 2(xi - eta) is anti-aligned with sign*eta.
_PHI_SPACE_RADIAL_CELLS = 0.75
_PHI_SPACE_ANGULAR_CELLS = 1.0


def resonance_scan(phase: str, sign: int, extent: float, resolution: int) -> ResonanceScan:
    """Locate T (phase ~ 0), S (grad_eta phase ~ 0) and R = T n S.

    The scan samples the reduced slice xi = (a, 0, 0), eta = (b, c, 0)
    with a, b, c on a half-cell-offset grid over [-extent, extent] (the
    offset keeps the scan away from the singular directions xi = 0 and
    eta = 0).  Thresholds are adaptive: a point is in T when |phase| is
    below the cell size times the local gradient magnitude.
    """
    _check_sign(sign)
    if phase not in ("phi", "psi"):
        raise ContractViolation(f"phase must be 'phi' or 'psi', got {phase!r}")
    if resolution < 8:
        raise GridRangeError(f"resolution must be at least 8 points per axis, got {resolution}")
    if not extent > 0.0:
        raise GridRangeError(f"scan extent must be positive, got {extent}")

    h = 2.0 * extent / resolution
    axis = -extent + h * (np.arange(resolution) + 0.5)
    a = axis[:, None, None]  # xi_1
    b = axis[None, :, None]  # eta_1
    c = axis[None, None, :]  # eta_2

    xi_mag = np.abs(a)
    eta_mag = np.sqrt(b**2 + c**2)
    dot = a * b  # xi . eta on the slice

    if phase == "phi":
        value = 2.0 * dot - eta_mag**2 + sign * eta_mag
        # grad_eta phi = 2 xi - 2 eta + sign eta/|eta|;  |grad_xi phi| = 2|eta|
        ge1 = 2.0 * a - 2.0 * b + sign * b / eta_mag
        ge2 = -2.0 * c + sign * c / eta_mag
        grad_sq = (2.0 * eta_mag) ** 2 + ge1**2 + ge2**2
        time_mask = np.abs(value) <= h * np.sqrt(grad_sq)

        # structure-aware space test (see note on _PHI_SPACE_*_CELLS)
        b1 = 2.0 * (a - b)
        b2 = -2.0 * c
        b_mag = np.sqrt(b1**2 + b2**2)
        radial = np.abs(b_mag - 1.0)
        cosang = -(sign) * (b1 * b + b2 * c) / (b_mag * eta_mag)
        angle = np.arccos(np.clip(cosang, -1.0, 1.0))
        space_mask = (radial <= _PHI_SPACE_RADIAL_CELLS * h) & (
            eta_mag * angle <= _PHI_SPACE_ANGULAR_CELLS * h
        )

        # On the space-resonant set the identity
        #   phi = |eta| (b.eta/|eta| +- 1) + |eta|^2   with b = 2(xi - eta)
        # reduces the phase to exactly |eta|^2, so joint resonance adds a
        # test against the tangential slope sqrt(2)|eta| of that
        # restriction plus its curvature floor h.  The plain pointwise
        # time test cannot resolve the intersection alone: the time and
        # space sets osculate along the branch, so points several cells
        # from the resonant sphere are within one cell of both.
        on_branch = eta_mag**2 <= h * (np.sqrt(2.0) * eta_mag + h)
        resonant_mask = time_mask & space_mask & on_branch
    else:
        value = -sign * xi_mag - xi_mag**2 + 2.0 * dot
        # grad_xi psi = -sign xi/|xi| - 2 xi + 2 eta;  grad_eta psi = 2 xi
        gx1 = -sign * np.sign(a) - 2.0 * a + 2.0 * b
        gx2 = 2.0 * c
        grad_sq = gx1**2 + gx2**2 + (2.0 * xi_mag) ** 2
        time_mask = np.abs(value) <= h * np.sqrt(grad_sq)
        # |grad_eta psi| = 2|xi| with a constant-slope local scale
        space_mask = 2.0 * xi_mag <= 2.0 * h
        resonant_mask = time_mask & space_mask

    def collect(mask: np.ndarray) -> np.ndarray:
        ia, ib, ic = np.nonzero(np.broadcast_to(mask, (resolution, resolution, resolution)))
        pts = np.zeros((ia.size, 6))
        pts[:, 0] = axis[ia]
        pts[:, 3] = axis[ib]
        pts[:, 4] = axis[ic]
        return pts

    return ResonanceScan(
        phase=phase,
        sign=sign,
        extent=extent,
        resolution=resolution,
        cell=h,
        time_set=collect(time_mask),
        space_set=collect(space_mask),
        resonant_set=collect(resonant_mask),
    )


# ---------------------------------------------------------------------------
# exponent bookkeeping


@dataclass(frozen=True)
class Parameters:
    """Exponent bookkeeping for the decay/bootstrap relations.

    The mutual constraints are checked by `validate_parameters`;
    `Parameters.consistent` builds a compliant set from (eps0, delta, N).
    sobolev_index is the moderate Sobolev order used by diagnostics in
    place of the large analytic regularity index.
    """

    eps0: float
    delta: float = 1.0 / 480.0
    N: int = 2400
    alpha: float = field(default=None)  # type: ignore[assignment]
    beta: float = field(default=None)  # type: ignore[assignment]
    delta_N: float = field(default=None)  # type: ignore[assignment]
    l: float = 1.0 / 3.0 - 1.0 / 60.0
    sobolev_index: int = 4

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, "alpha", 1.0 / 6.0 - 2.0 * self.delta)
        if self.beta is None:
            object.__setattr__(self, "beta", 1.0 - 3.0 * self.alpha)
        if self.delta_N is None:
            object.__setattr__(self, "delta_N", 2.0 / (self.N - 2))

    @classmethod
    def consistent(cls, eps0: float, delta: float = 1.0 / 480.0, N: int = 2400) -> "Parameters":
        return cls(eps0=eps0, delta=delta, N=N)


@dataclass(frozen=True)
class ParameterCheck:
    name: str
    value: float
    bound: float
    residual: float
    passed: bool


@dataclass(frozen=True)
class ParameterReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self):
        out = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            out.append(f"{status} {c.name} value={c.value:.12g} bound={c.bound:.12g} residual={c.residual:.3e}")
        return out


def validate_parameters(p: Parameters, tol: float = 1e-12) -> ParameterReport:
    """Check every mutual relation of the exponent set, with residuals."""
    checks = []

    def equality(name, value, target):
        res = abs(value - target)
        checks.append(ParameterCheck(name, value, target, res, res <= tol))

    def lower(name, value, bound):
        # value >= bound
        res = max(0.0, bound - value)
        checks.append(ParameterCheck(name, value, bound, res, value >= bound - tol))

    def upper(name, value, bound):
        # value <= bound
        res = max(0.0, value - bound)
        checks.append(ParameterCheck(name, value, bound, res, value <= bound + tol))

    lower("eps0 > 0", p.eps0, 0.0)
    lower("delta > 0", p.delta, 0.0)
    equality("alpha = 1/6 - 2 delta", p.alpha, 1.0 / 6.0 - 2.0 * p.delta)
    equality("beta = 1 - 3 alpha", p.beta, 1.0 - 3.0 * p.alpha)
    lower("delta >= 5/N", p.delta, 5.0 / p.N)
    equality("delta_N = 2/(N-2)", p.delta_N, 2.0 / (p.N - 2))
    upper("2 delta_N <= delta", 2.0 * p.delta_N, p.delta)
    upper("delta <= 1/480", p.delta, 1.0 / 480.0)
    equality("l = 1/3 - 1/60", p.l, 1.0 / 3.0 - 1.0 / 60.0)
    return ParameterReport(checks=tuple(checks))
