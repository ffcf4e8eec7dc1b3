"""Time stepping for the coupled Schrodinger/wave system.

Two independent schemes are provided so they can cross-validate each
other:

* ``strang_split``: physical-space Strang splitting.  The linear
  half-steps are exact in Fourier space (free Schrodinger propagator;
  exact cosine/sinc wave rotation), and the nonlinear step is the exact
  flow of the frozen-coefficient system: a pointwise unimodular phase
  rotation u <- exp(-i h n(x)) u plus the wave-velocity kick
  n_t <- n_t + h Laplacian|u|^2 (|u| is invariant under the rotation,
  so the kick uses the nonlinear substep value exactly).
* ``profile_lawson``: a two-stage Runge-Kutta step on the profile
  unknowns (f, g_pm), with all stiff linear factors applied exactly
  through the free propagators (interaction picture), i.e. a Lawson-RK2
  exponential integrator.

Both schemes are second order; fixed step size keeps runs deterministic.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from . import diagnostics
from .errors import ContractViolation, DivergenceError, SnapshotLookupError
from .fields import Field, Space, physical_field
from .grid import Grid, fft_workers
from .model import Parameters, ProfilePair, State, state_from_profiles, to_profiles

__all__ = ["StepConfig", "Trajectory", "strang_step", "wave_duhamel_step", "profile_step", "run"]


@dataclass(frozen=True)
class StepConfig:
    """Run controls: step size, scheme, and snapshot cadence.

    ``coupling`` scales the quadratic interaction (0 gives the free
    linear flow, used by the linear diagnostics checks).  The advisory
    stability bound h <= dx^2/pi for the accuracy of the nonlinear phase
    is reported by `stability_advisory`, not enforced.
    """

    h: float
    t_end: float
    scheme: str = "strang_split"
    dealias: bool = False
    snapshot_stride: int = 1
    coupling: float = 1.0
    wave_quadrature: str = "trapezoid"

    def __post_init__(self):
        if self.h <= 0:
            raise ContractViolation(f"step size must be positive, got {self.h}")
        if self.t_end < 0:
            raise ContractViolation(f"t_end must be nonnegative, got {self.t_end}")
        if self.scheme not in ("strang_split", "profile_lawson"):
            raise ContractViolation(f"unknown scheme {self.scheme!r}")
        if self.snapshot_stride < 1:
            raise ContractViolation("snapshot_stride must be a positive integer")
        if self.wave_quadrature not in ("trapezoid", "midpoint"):
            raise ContractViolation(f"unknown wave quadrature {self.wave_quadrature!r}")

    def stability_advisory(self, grid: Grid) -> float:
        return grid.dx**2 / np.pi


@dataclass
class Trajectory:
    """Ordered snapshots plus the per-snapshot diagnostics rows."""

    grid: Grid
    params: Parameters
    config: StepConfig
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    _profiles: dict = field(default_factory=dict, repr=False)

    def append(self, state: State) -> None:
        if self.times and state.t <= self.times[-1]:
            raise ContractViolation("snapshot times must be strictly increasing")
        self.times.append(state.t)
        self.states.append(state)

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        for i, ti in enumerate(self.times):
            if abs(ti - t) <= tol * max(1.0, abs(t)):
                return i
        raise SnapshotLookupError(f"no snapshot stored at t = {t}")

    def state_at(self, t: float) -> State:
        return self.states[self.index_of(t)]

    def profiles(self, i: int) -> ProfilePair:
        """Profile pair of snapshot i (cached; conversion is pure)."""
        if i not in self._profiles:
            self._profiles[i] = to_profiles(self.states[i])
        return self._profiles[i]

    def profiles_at(self, t: float) -> ProfilePair:
        return self.profiles(self.index_of(t))

    def write_diagnostics_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(",".join(diagnostics.DIAGNOSTIC_COLUMNS) + "\n")
            for row in self.rows:
                fh.write(diagnostics.format_row(row) + "\n")


# ---------------------------------------------------------------------------
# spectral kernels (fft-ordered complex arrays, no Field wrappers)


def _fftn(a):
    return scipy.fft.fftn(a, norm="ortho", workers=fft_workers())


def _ifftn(a):
    return scipy.fft.ifftn(a, norm="ortho", workers=fft_workers())


class _WaveTables:
    """Exact free-wave rotation factors over a step tau."""

    def __init__(self, grid: Grid, tau: float):
        kmag = grid.k_mag
        self.cos = np.cos(kmag * tau)
        # sin(|xi| tau)/|xi| with the analytic |xi| -> 0 limit tau
        self.sinc = tau * np.sinc(kmag * tau / np.pi)
        self.ksin = kmag * np.sin(kmag * tau)

    def apply(self, n_hat, nt_hat):
        return (
            self.cos * n_hat + self.sinc * nt_hat,
            -self.ksin * n_hat + self.cos * nt_hat,
        )


class _StrangKernel:
    """One Strang step L(h/2) N(h) L(h/2) on spectral arrays."""

    def __init__(self, grid: Grid, h: float, dealias: bool = False, coupling: float = 1.0):
        self.grid = grid
        self.h = h
        self.coupling = coupling
        kmag = grid.k_mag
        self.ksq = kmag**2
        self.exp_half = np.exp(-0.5j * h * self.ksq)
        self.wave_half = _WaveTables(grid, 0.5 * h)
        self.mask = grid.dealias_mask if dealias else grid.nyquist_mask

    def _linear_half(self, uh, nh, nth, n_mean, nt_mean):
        uh = self.exp_half * uh
        nh, nth = self.wave_half.apply(nh, nth)
        n_mean = n_mean + 0.5 * self.h * nt_mean
        return uh, nh, nth, n_mean, nt_mean

    def step(self, uh, nh, nth, n_mean, nt_mean):
        h, c = self.h, self.coupling
        uh, nh, nth, n_mean, nt_mean = self._linear_half(uh, nh, nth, n_mean, nt_mean)
        if c != 0.0:
            u = _ifftn(uh)
            n_phys = _ifftn(nh).real + n_mean
            u = np.exp(-1j * h * c * n_phys) * u
            uh = _fftn(u)
            uh[self.mask] = 0.0
            source_hat = -self.ksq * _fftn(u.real**2 + u.imag**2)
            source_hat[self.mask] = 0.0
            nth = nth + (h * c) * source_hat
        uh, nh, nth, n_mean, nt_mean = self._linear_half(uh, nh, nth, n_mean, nt_mean)
        return uh, nh, nth, n_mean, nt_mean


class _ProfileKernel:
    """Heun (two-stage RK) step on spectral profile arrays."""

    def __init__(self, grid: Grid, h: float, dealias: bool = False, coupling: float = 1.0):
        self.grid = grid
        self.h = h
        self.coupling = coupling
        kmag = grid.k_mag
        self.kmag = kmag
        self.ksq = kmag**2
        self.mask = grid.dealias_mask if dealias else grid.nyquist_mask

    def rhs(self, fh, gph, gmh, t, mean_n0, mean_nt0):
        sch = np.exp(-1j * t * self.ksq)  # e^{it Laplacian}
        wav = np.exp(1j * t * self.kmag)  # e^{it Lambda}
        u = _ifftn(sch * fh)
        w_plus = _ifftn(np.conj(wav) * gph)
        w_minus = _ifftn(wav * gmh)
        n_full = 0.5 * (w_plus - w_minus) + (mean_n0 + t * mean_nt0)
        nu_hat = _fftn(n_full * u)
        nu_hat[self.mask] = 0.0
        uu_hat = _fftn(u.real**2 + u.imag**2)
        uu_hat[self.mask] = 0.0
        c = self.coupling
        f_dot = (-1j * c) * np.conj(sch) * nu_hat
        lam_uu = self.kmag * uu_hat
        g_dot_p = (-1j * c) * wav * lam_uu
        g_dot_m = (-1j * c) * np.conj(wav) * lam_uu
        return f_dot, g_dot_p, g_dot_m

    def step(self, fh, gph, gmh, t, mean_n0, mean_nt0):
        h = self.h
        k1 = self.rhs(fh, gph, gmh, t, mean_n0, mean_nt0)
        pred = (fh + h * k1[0], gph + h * k1[1], gmh + h * k1[2])
        k2 = self.rhs(*pred, t + h, mean_n0, mean_nt0)
        return (
            fh + 0.5 * h * (k1[0] + k2[0]),
            gph + 0.5 * h * (k1[1] + k2[1]),
            gmh + 0.5 * h * (k1[2] + k2[2]),
        )


# ---------------------------------------------------------------------------
# public single-step operations


def _state_to_spectral(state: State):
    uh = _fftn(state.u.values)
    nh = _fftn(state.n.values)
    nth = _fftn(state.n_t.values)
    nh[0, 0, 0] = 0.0
    nth[0, 0, 0] = 0.0
    return uh, nh, nth


def _state_from_spectral(grid: Grid, uh, nh, nth, n_mean, nt_mean, t) -> State:
    return State(
        u=physical_field(grid, _ifftn(uh)),
        n=physical_field(grid, _ifftn(nh)),
        n_t=physical_field(grid, _ifftn(nth)),
        n_mean=n_mean,
        n_t_mean=nt_mean,
        t=t,
    )


def strang_step(state: State, h: float, dealias: bool = False, coupling: float = 1.0) -> State:
    """Advance a State by one Strang-splitting step of size h.

    Negative h runs the step backwards (exact for the linear flow).
    """
    if h == 0.0:
        raise ContractViolation("step size must be nonzero")
    kernel = _StrangKernel(state.grid, h, dealias, coupling)
    uh, nh, nth = _state_to_spectral(state)
    out = kernel.step(uh, nh, nth, state.n_mean, state.n_t_mean)
    new = _state_from_spectral(state.grid, *out, state.t + h)
    if not new.is_finite():
        raise DivergenceError(0)
    return new


def wave_duhamel_step(
    n: Field,
    n_t: Field,
    source: tuple,
    h: float,
    quadrature: str = "trapezoid",
) -> tuple:
    """Exact-in-Fourier forced wave step over [0, h].

    Solves d_tt n = Laplacian n + S with Duhamel quadrature of the
    source: ``trapezoid`` takes samples (S(0), S(h)), ``midpoint`` takes
    (S(h/2),).  Zero modes of n and n_t pass through unchanged; the
    caller tracks means separately.
    """
    n.require(Space.PHYSICAL)
    n_t.require(Space.PHYSICAL)
    need = 2 if quadrature == "trapezoid" else 1
    if quadrature not in ("trapezoid", "midpoint"):
        raise ContractViolation(f"unknown quadrature {quadrature!r}")
    if len(source) != need:
        raise ContractViolation(f"{quadrature} quadrature needs {need} source samples, got {len(source)}")

    grid = n.grid
    nh = _fftn(n.values)
    nth = _fftn(n_t.values)
    zero = (nh[0, 0, 0], nth[0, 0, 0])

    tables = _WaveTables(grid, h)
    nh_new, nth_new = tables.apply(nh, nth)

    def source_hat(s: Field):
        s.require(Space.PHYSICAL)
        return _fftn(s.values)

    if quadrature == "trapezoid":
        s0 = source_hat(source[0])
        s1 = source_hat(source[1])
        # sin(|xi|(h - tau))/|xi| weights: tau=0 -> sinc table, tau=h -> 0
        nh_new = nh_new + 0.5 * h * tables.sinc * s0
        nth_new = nth_new + 0.5 * h * (tables.cos * s0 + s1)
    else:
        smid = source_hat(source[0])
        half = _WaveTables(grid, 0.5 * h)
        nh_new = nh_new + h * half.sinc * smid
        nth_new = nth_new + h * half.cos * smid

    nh_new[0, 0, 0], nth_new[0, 0, 0] = zero
    return (
        physical_field(grid, _ifftn(nh_new)),
        physical_field(grid, _ifftn(nth_new)),
    )


def profile_step(p: ProfilePair, h: float, dealias: bool = False, coupling: float = 1.0) -> ProfilePair:
    """Advance a ProfilePair by one Lawson-RK2 step of size h."""
    if h == 0.0:
        raise ContractViolation("step size must be nonzero")
    kernel = _ProfileKernel(p.grid, h, dealias, coupling)
    fh = _fftn(p.f.values)
    gph = _fftn(p.g_plus.values)
    gmh = _fftn(p.g_minus.values)
    fh, gph, gmh = kernel.step(fh, gph, gmh, p.t, p.mean_n0, p.mean_nt0)
    out = ProfilePair(
        f=physical_field(p.grid, _ifftn(fh)),
        g_plus=physical_field(p.grid, _ifftn(gph)),
        g_minus=physical_field(p.grid, _ifftn(gmh)),
        t=p.t + h,
        mean_n0=p.mean_n0,
        mean_nt0=p.mean_nt0,
    )
    if not (out.f.is_finite() and out.g_plus.is_finite() and out.g_minus.is_finite()):
        raise DivergenceError(0)
    return out


# ---------------------------------------------------------------------------
# full runs


def _progress(state: State) -> None:
    mass = diagnostics.lp_norm(state.u, 2.0)
    print(
        f"t={state.t:.6g} mass={mass:.12g} linf_u={state.u.linf():.6g} "
        f"linf_n={abs(state.n.values.real).max() + abs(state.n_mean):.6g}",
        file=sys.stderr,
    )


def run(initial: State, cfg: StepConfig, params: Parameters, out_dir=None, quiet: bool = False) -> Trajectory:
    """Step from the initial state to t_end, collecting snapshots and rows.

    Snapshots are stored every ``snapshot_stride`` steps (plus the
    initial and final states).  The evaluation order is fixed, so a
    given (initial data, config) pair always produces bit-identical
    trajectories and diagnostics.
    """
    from . import data_io  # local import to avoid a cycle

    initial.validate()
    grid = initial.grid
    n_steps = int(round(cfg.t_end / cfg.h)) if cfg.t_end > 0 else 0
    traj = Trajectory(grid=grid, params=params, config=cfg)
    traj.manifest = data_io.build_manifest(initial, cfg, params)
    if not int(traj.manifest["data_norms_pass"]) and not quiet:
        print(
            "warning: initial data exceeds the smallness budget "
            f"(eps0={params.eps0:g}); see the manifest norms",
            file=sys.stderr,
        )

    writer = None
    if out_dir is not None:
        writer = data_io.TrajectoryWriter(out_dir, traj.manifest)

    def take_snapshot(state: State, step_index: int) -> None:
        if not state.is_finite():
            raise DivergenceError(step_index)
        traj.append(state)
        row = diagnostics.snapshot_row(traj, len(traj.times) - 1)
        traj.rows.append(row)
        if writer is not None:
            writer.write_snapshot(state, len(traj.times) - 1)
        if not quiet:
            _progress(state)

    take_snapshot(initial, 0)
    if writer is not None:
        # manifest goes to disk before any stepping, already carrying the
        # content hash of the stored initial snapshot
        writer.write_manifest()

    if cfg.scheme == "strang_split":
        kernel = _StrangKernel(grid, cfg.h, cfg.dealias, cfg.coupling)
        uh, nh, nth = _state_to_spectral(initial)
        n_mean, nt_mean = initial.n_mean, initial.n_t_mean
        for step in range(1, n_steps + 1):
            uh, nh, nth, n_mean, nt_mean = kernel.step(uh, nh, nth, n_mean, nt_mean)
            if not np.all(np.isfinite(uh)):
                raise DivergenceError(step)
            if step % cfg.snapshot_stride == 0 or step == n_steps:
                t = initial.t + step * cfg.h
                take_snapshot(_state_from_spectral(grid, uh, nh, nth, n_mean, nt_mean, t), step)
    else:
        kernel = _ProfileKernel(grid, cfg.h, cfg.dealias, cfg.coupling)
        p0 = to_profiles(initial)
        fh = _fftn(p0.f.values)
        gph = _fftn(p0.g_plus.values)
        gmh = _fftn(p0.g_minus.values)
        for step in range(1, n_steps + 1):
            t_prev = initial.t + (step - 1) * cfg.h
            fh, gph, gmh = kernel.step(fh, gph, gmh, t_prev, p0.mean_n0, p0.mean_nt0)
            if not np.all(np.isfinite(fh)):
                raise DivergenceError(step)
            if step % cfg.snapshot_stride == 0 or step == n_steps:
                t = initial.t + step * cfg.h
                pair = ProfilePair(
                    f=physical_field(grid, _ifftn(fh)),
                    g_plus=physical_field(grid, _ifftn(gph)),
                    g_minus=physical_field(grid, _ifftn(gmh)),
                    t=t,
                    mean_n0=p0.mean_n0,
                    mean_nt0=p0.mean_nt0,
                )
                take_snapshot(state_from_profiles(pair), step)

    if writer is not None:
        writer.write_diagnostics(traj)
    return traj
