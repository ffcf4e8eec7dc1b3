"""Initial-data families, smallness validation, snapshots, manifests.

The snapshot format is bit-exact and versioned:

    magic "ZAKS", u16 version=1, u16 flags, u32 n_per_axis,
    f64 L, f64 t, f64 n_mean, f64 nt_mean,

followed by little-endian f64 arrays in x-fastest order: u (interleaved
re/im), n, n_t.  Run manifests are flat key=value text files written
before stepping begins; the manifest records a content hash of the
initial snapshot so single-byte corruption is detectable.
"""

from __future__ import annotations

import hashlib
import math
import os
import struct
from dataclasses import dataclass

import numpy as np

from ._version import __version__
from .diagnostics import besov_norm, lp_norm, sobolev_norm, trust_window
from .errors import (
    BoxFitError,
    ContractViolation,
    SnapshotCorruptionError,
    SnapshotFormatError,
    SnapshotVersionError,
)
from .fields import Field, physical_field
from .grid import Grid
from .model import Parameters, State
from .spectral import apply_multiplier, dft_forward, lambda_power_symbol, radial_bump

__all__ = [
    "DataFamily",
    "generate_initial_data",
    "DataNormReport",
    "validate_data_norms",
    "write_snapshot",
    "read_snapshot",
    "file_sha256",
    "build_manifest",
    "write_manifest",
    "read_manifest",
    "TrajectoryWriter",
    "load_trajectory",
    "read_config",
]


# ---------------------------------------------------------------------------
# data families


@dataclass(frozen=True)
class DataFamily:
    """Smooth localized initial data for (u, n, dt n).

    kinds: ``gaussian`` (exp(-|x|^2/2 sigma^2)), ``modulated_gaussian``
    (gaussian times a plane-wave carrier with a seeded phase), and
    ``smooth_bump`` (compactly supported C-infinity bump).  The wave
    parts use the same shape at ``n_width``; dt n gets an odd x1-moment
    factor so it is localized and exactly mean-free.
    """

    kind: str = "gaussian"
    amplitude: float = 0.01
    width: float = 1.0
    carrier: tuple = (0.0, 0.0, 0.0)
    n_amplitude: float = 0.0
    n1_amplitude: float = 0.0
    n_width: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "modulated_gaussian", "smooth_bump"):
            raise ContractViolation(f"unknown data family kind {self.kind!r}")
        if self.width <= 0 or self.n_width <= 0:
            raise ContractViolation("data widths must be positive")


def _shape(kind: str, r_over_sigma: np.ndarray) -> np.ndarray:
    if kind == "smooth_bump":
        return radial_bump(r_over_sigma)
    return np.exp(-0.5 * r_over_sigma**2)


def generate_initial_data(family: DataFamily, grid: Grid) -> State:
    """Deterministic initial state for a family on a grid.

    Raises BoxFitError when a width is >= L/8; the generated n and dt n
    have their means subtracted exactly, and the mean scalars are 0.
    """
    for name, w in (("width", family.width), ("n_width", family.n_width)):
        if w >= grid.length / 8.0:
            raise BoxFitError(f"{name} {w} must be below L/8 = {grid.length / 8.0}")

    rng = np.random.default_rng(family.seed)
    phase0 = float(rng.uniform(0.0, 2.0 * np.pi))

    r = grid.x_mag
    u_vals = family.amplitude * _shape(family.kind, r / family.width)
    u_vals = u_vals.astype(np.complex128)
    if family.kind == "modulated_gaussian" or any(c != 0.0 for c in family.carrier):
        X, Y, Z = grid.xmesh()
        k0 = family.carrier
        carrier_phase = k0[0] * X + k0[1] * Y + k0[2] * Z
        if family.kind == "modulated_gaussian":
            carrier_phase = carrier_phase + phase0
        u_vals = u_vals * np.exp(1j * carrier_phase)

    def mean_free(vals: np.ndarray) -> np.ndarray:
        vals = vals - vals.mean()
        return vals.astype(np.complex128)

    n_vals = mean_free(family.n_amplitude * _shape(family.kind, r / family.n_width))
    X, _, _ = grid.xmesh()
    odd = np.broadcast_to(X / family.n_width, grid.shape)
    n1_vals = mean_free(family.n1_amplitude * odd * _shape(family.kind, r / family.n_width))

    return State(
        u=physical_field(grid, u_vals),
        n=physical_field(grid, n_vals),
        n_t=physical_field(grid, n1_vals),
        n_mean=0.0,
        n_t_mean=0.0,
        t=0.0,
    )


# ---------------------------------------------------------------------------
# smallness validation


@dataclass(frozen=True)
class DataNormReport:
    """Each smallness norm of the initial data against eps0."""

    eps0: float
    norms: tuple  # (name, value) pairs
    envelope_total: float
    wave_total: float

    @property
    def passed(self) -> bool:
        return self.envelope_total <= self.eps0 and self.wave_total <= self.eps0

    @property
    def margin(self) -> float:
        worst = max(self.envelope_total, self.wave_total)
        return math.inf if worst == 0.0 else self.eps0 / worst

    def lines(self):
        out = [f"{name}={value:.12g}" for name, value in self.norms]
        for label, total in (("envelope_total", self.envelope_total), ("wave_total", self.wave_total)):
            status = "PASS" if total <= self.eps0 else "FAIL"
            out.append(f"{status} {label} value={total:.12g} bound={self.eps0:.12g}")
        return out


def _bracket_x(grid: Grid, power: int) -> np.ndarray:
    return (1.0 + grid.x_mag**2) ** (power / 2.0)


def validate_data_norms(state: State, params: Parameters) -> DataNormReport:
    """Discrete analogues of the smallness hypotheses on the data.

    Envelope side: ||u0||_{H^{s+1}} + ||<x>^2 u0||_{L2}.  Wave side:
    ||(Lambda n0, n1)||_{H^{s-1}} + ||<Lambda>(Lambda n0, n1)||_{B^0_{1,1}}
    + ||<x>(n0, <x> n1)||_{H^1}.  The Sobolev order is the moderate
    diagnostics index s, standing in for the large analytic one.
    """
    grid = state.grid
    s = params.sobolev_index

    u_sob = sobolev_norm(state.u, s + 1)
    u_wt = lp_norm(state.u.with_values(_bracket_x(grid, 2) * state.u.values), 2.0)

    lam_n0 = apply_multiplier(dft_forward(state.n), lambda_power_symbol(1.0))
    n1_hat = dft_forward(state.n_t)

    pair_sob = sobolev_norm(lam_n0, s - 1) + sobolev_norm(n1_hat, s - 1)

    def bessel1(f_hat: Field) -> Field:
        from .spectral import bessel_power_symbol

        return apply_multiplier(f_hat, bessel_power_symbol(1.0))

    pair_besov = besov_norm(bessel1(lam_n0), 0.0, 1.0, 1.0) + besov_norm(bessel1(n1_hat), 0.0, 1.0, 1.0)

    w_n0 = state.n.with_values(_bracket_x(grid, 1) * state.n.values)
    w_n1 = state.n_t.with_values(_bracket_x(grid, 2) * state.n_t.values)
    pair_weight = sobolev_norm(w_n0, 1.0) + sobolev_norm(w_n1, 1.0)

    norms = (
        ("u_sobolev", u_sob),
        ("u_weighted", u_wt),
        ("wave_sobolev", pair_sob),
        ("wave_besov", pair_besov),
        ("wave_weighted", pair_weight),
    )
    return DataNormReport(
        eps0=params.eps0,
        norms=norms,
        envelope_total=u_sob + u_wt,
        wave_total=pair_sob + pair_besov + pair_weight,
    )


# ---------------------------------------------------------------------------
# snapshot format

SNAPSHOT_MAGIC = b"ZAKS"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sHHIdddd")


def write_snapshot(state: State, path) -> None:
    """Write a state in the bit-exact binary snapshot format."""
    grid = state.grid
    header = _HEADER.pack(
        SNAPSHOT_MAGIC,
        SNAPSHOT_VERSION,
        0,
        grid.n,
        grid.length,
        state.t,
        state.n_mean,
        state.n_t_mean,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ravel(state.u.values, order="F").astype("<c16").tobytes())
        fh.write(np.ravel(state.n.values.real, order="F").astype("<f8").tobytes())
        fh.write(np.ravel(state.n_t.values.real, order="F").astype("<f8").tobytes())


def read_snapshot(path) -> State:
    """Read a snapshot, rejecting malformed, truncated or future files."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise SnapshotCorruptionError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, _flags, n, length, t, n_mean, nt_mean = _HEADER.unpack_from(blob)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise SnapshotVersionError(f"{path}: unsupported snapshot version {version}")
    if n <= 0 or n % 2 != 0 or n > 8192 or not math.isfinite(length) or length <= 0:
        raise SnapshotFormatError(f"{path}: implausible grid header (n={n}, L={length})")
    count = n**3
    expected = _HEADER.size + count * 16 + 2 * count * 8
    if len(blob) != expected:
        raise SnapshotCorruptionError(
            f"{path}: payload size {len(blob)} does not match expected {expected}"
        )
    grid = Grid(n, length)
    off = _HEADER.size
    u = np.frombuffer(blob, dtype="<c16", count=count, offset=off).reshape(grid.shape, order="F")
    off += count * 16
    n_arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(grid.shape, order="F")
    off += count * 8
    nt_arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(grid.shape, order="F")
    return State(
        u=physical_field(grid, u.copy()),
        n=physical_field(grid, n_arr.copy()),
        n_t=physical_field(grid, nt_arr.copy()),
        n_mean=n_mean,
        n_t_mean=nt_mean,
        t=t,
    )


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# manifests


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def build_manifest(initial: State, cfg, params: Parameters) -> dict:
    """Reproducibility record: config echo, measured norms, trust window."""
    grid = initial.grid
    report = validate_data_norms(initial, params)
    tw = trust_window(initial.u, (initial.n, initial.n_t))
    manifest = {
        "format": "zakbench-run",
        "manifest_version": "1",
        "code_version": __version__,
        "grid_n": grid.n,
        "grid_length": grid.length,
        "scheme": cfg.scheme,
        "h": cfg.h,
        "t_end": cfg.t_end,
        "snapshot_stride": cfg.snapshot_stride,
        "dealias": int(cfg.dealias),
        "coupling": cfg.coupling,
        "wave_quadrature": cfg.wave_quadrature,
        "eps0": params.eps0,
        "delta": params.delta,
        "N": params.N,
        "alpha": params.alpha,
        "beta": params.beta,
        "delta_N": params.delta_N,
        "l": params.l,
        "sobolev_index": params.sobolev_index,
        "t0": initial.t,
        "n_mean0": initial.n_mean,
        "nt_mean0": initial.n_t_mean,
        "trust_window_t_end": tw.t_end,
        "trust_window_radius": tw.mass_radius,
        "trust_window_speed": tw.speed,
        "data_norms_pass": int(report.passed),
    }
    for name, value in report.norms:
        manifest[f"norm_{name}"] = value
    manifest["norm_envelope_total"] = report.envelope_total
    manifest["norm_wave_total"] = report.wave_total
    return manifest


def write_manifest(manifest: dict, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for key, value in manifest.items():
            fh.write(f"{key}={_fmt(value)}\n")


def read_manifest(path) -> dict:
    out = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise SnapshotFormatError(f"{path}: malformed manifest line {line!r}")
            key, value = line.split("=", 1)
            out[key] = value
    return out


class TrajectoryWriter:
    """Writes snapshots, the manifest, and the diagnostics CSV to a run
    directory.  The initial snapshot's hash is recorded in the manifest."""

    def __init__(self, out_dir, manifest: dict):
        self.out_dir = str(out_dir)
        self.manifest = manifest
        os.makedirs(self.out_dir, exist_ok=True)

    def snapshot_path(self, index: int) -> str:
        return os.path.join(self.out_dir, f"snapshot_{index:05d}.zaks")

    def write_snapshot(self, state: State, index: int) -> None:
        path = self.snapshot_path(index)
        write_snapshot(state, path)
        if index == 0:
            self.manifest["initial_snapshot_sha256"] = file_sha256(path)

    def write_manifest(self) -> None:
        write_manifest(self.manifest, os.path.join(self.out_dir, "manifest.txt"))

    def write_diagnostics(self, traj) -> None:
        traj.write_diagnostics_csv(os.path.join(self.out_dir, "diagnostics.csv"))


def load_trajectory(run_dir, verify_hash: bool = True):
    """Rebuild an in-memory trajectory from a run directory."""
    from .integrators import StepConfig, Trajectory

    run_dir = str(run_dir)
    manifest = read_manifest(os.path.join(run_dir, "manifest.txt"))
    grid = Grid(int(manifest["grid_n"]), float(manifest["grid_length"]))
    params = Parameters(
        eps0=float(manifest["eps0"]),
        delta=float(manifest["delta"]),
        N=int(manifest["N"]),
        alpha=float(manifest["alpha"]),
        beta=float(manifest["beta"]),
        delta_N=float(manifest["delta_N"]),
        l=float(manifest["l"]),
        sobolev_index=int(manifest["sobolev_index"]),
    )
    cfg = StepConfig(
        h=float(manifest["h"]),
        t_end=float(manifest["t_end"]),
        scheme=manifest["scheme"],
        dealias=bool(int(manifest["dealias"])),
        snapshot_stride=int(manifest["snapshot_stride"]),
        coupling=float(manifest["coupling"]),
        wave_quadrature=manifest["wave_quadrature"],
    )
    traj = Trajectory(grid=grid, params=params, config=cfg, manifest=manifest)

    names = sorted(f for f in os.listdir(run_dir) if f.startswith("snapshot_") and f.endswith(".zaks"))
    if verify_hash and names and "initial_snapshot_sha256" in manifest:
        measured = file_sha256(os.path.join(run_dir, names[0]))
        if measured != manifest["initial_snapshot_sha256"]:
            raise SnapshotCorruptionError(
                f"{run_dir}: initial snapshot hash mismatch ({measured[:12]}... vs manifest)"
            )
    for name in names:
        traj.append(read_snapshot(os.path.join(run_dir, name)))

    csv_path = os.path.join(run_dir, "diagnostics.csv")
    if os.path.exists(csv_path):
        with open(csv_path, "r", encoding="ascii") as fh:
            header = fh.readline().strip().split(",")
            for line in fh:
                cells = line.rstrip("\n").split(",")
                row = {}
                for col, cell in zip(header, cells):
                    row[col] = float(cell) if cell else None
                traj.rows.append(row)
    return traj


# ---------------------------------------------------------------------------
# flat key=value config files


def read_config(path) -> dict:
    """Parse a flat key=value config file ('#' starts a comment)."""
    out = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ContractViolation(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
