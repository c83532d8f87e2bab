"""Spectral diagnostics for grid-sampled periodic fields.

Fields live on a 2pi x 2pi torus or on the periodized truncated strip
2pi x [-Y, Y]. All transforms are plain FFTs on the sampling grid; the strip
is treated as a torus of height 2Y, which is accurate for exponentially
decaying zero-circulation sheet fields (the one class of strip fields used
here).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ._spectral import TWO_PI
from .biot_savart import BlobParameter, velocity_on_grid
from .geometry import VortexSheet

DECAY_THRESHOLD = 5e-3


# ---------------------------------------------------------------------------
# grid fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridField:
    """Uniformly sampled periodic field. data has shape (nx, ny) for scalars
    or (nx, ny, 2) for velocities; x covers [x0, x0 + 2pi) and y is cell
    centered on a strip or node centered on the torus."""

    data: np.ndarray
    x: np.ndarray
    y: np.ndarray
    domain: str = "torus"            # "torus" | "strip"
    units: str = "dimensionless"

    def __post_init__(self):
        nx, ny = self.x.size, self.y.size
        if self.data.shape[:2] != (nx, ny):
            raise ValueError("data shape does not match the grid")
        if nx & (nx - 1) or ny & (ny - 1):
            raise ValueError("grid dimensions must be powers of two")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("non-finite field data")
        if self.domain not in ("torus", "strip"):
            raise ValueError(f"unknown domain {self.domain!r}")

    @property
    def is_vector(self) -> bool:
        return self.data.ndim == 3

    @property
    def lengths(self):
        dx = self.x[1] - self.x[0]
        dy = self.y[1] - self.y[0]
        return self.x.size * dx, self.y.size * dy

    @property
    def cell_area(self) -> float:
        lx, ly = self.lengths
        return (lx / self.x.size) * (ly / self.y.size)

    def wavenumbers(self):
        lx, ly = self.lengths
        kx = np.fft.fftfreq(self.x.size, 1.0 / self.x.size) * (TWO_PI / lx)
        ky = np.fft.fftfreq(self.y.size, 1.0 / self.y.size) * (TWO_PI / ly)
        return np.meshgrid(kx, ky, indexing="ij")

    def integral(self, values: np.ndarray) -> float:
        return float(np.sum(values) * self.cell_area)

    def lp_norm(self, p: float) -> float:
        mag = np.linalg.norm(self.data, axis=-1) if self.is_vector else np.abs(self.data)
        return self.integral(mag ** p) ** (1.0 / p)

    def strip_decay_ratio(self) -> float:
        """Boundary-row magnitude relative to the interior maximum."""
        mag = np.linalg.norm(self.data, axis=-1) if self.is_vector else np.abs(self.data)
        boundary = max(mag[:, 0].max(), mag[:, -1].max())
        return float(boundary / mag.max()) if mag.max() > 0 else 0.0

    def check_strip_decay(self, threshold: float = DECAY_THRESHOLD) -> bool:
        ratio = self.strip_decay_ratio()
        if ratio > threshold:
            warnings.warn(f"strip field decays poorly: boundary/interior = "
                          f"{ratio:.2e} > {threshold:.0e}")
            return False
        return True


def torus_grid(m: int, my: int | None = None):
    my = m if my is None else my
    x = np.arange(m) * TWO_PI / m
    y = np.arange(my) * TWO_PI / my
    return x, y


def strip_grid(m: int, my: int, y_max: float):
    """x node-centered on [-pi, pi), y cell-centered on [-Y, Y] so that no
    sample row can coincide with a near-axis sheet."""
    x = -np.pi + np.arange(m) * TWO_PI / m
    y = -y_max + (np.arange(my) + 0.5) * (2.0 * y_max / my)
    return x, y


def sample_sheet_velocity(sheet: VortexSheet, m: int, my: int, y_max: float,
                          n_fine: int | None = None) -> GridField:
    """Sample the sheet-induced velocity on the strip grid. The sheet is
    spectrally upsampled until the trapezoid tail e^{-N d_min} at the nearest
    grid row is below roundoff."""
    x, y = strip_grid(m, my, y_max)
    if n_fine is None:
        d_min = float(np.abs(y[None, :] - sheet.h[:, None]).min())
        need = max(sheet.n, int(np.ceil(30.0 / max(d_min, 1e-3))))
        n_fine = 1 << int(np.ceil(np.log2(need)))
        n_fine = min(n_fine, 1 << 14)
    data = velocity_on_grid(sheet.upsampled(n_fine), x, y, BlobParameter(0.0))
    fld = GridField(data, x, y, domain="strip", units="velocity")
    if abs(sheet.circulation()) < 1e-10:
        fld.check_strip_decay()
    return fld


def save_grid_field(fld: GridField, path: str | Path) -> Path:
    """Flat float64 binary, row-major, with a text sidecar header."""
    path = Path(path)
    fld.data.astype(np.float64).tofile(path)
    shape = "x".join(str(s) for s in fld.data.shape)
    lines = [f"shape = {shape}",
             f"domain = {fld.domain}",
             f"x0 = {fld.x[0]!r}", f"dx = {(fld.x[1] - fld.x[0])!r}",
             f"y0 = {fld.y[0]!r}", f"dy = {(fld.y[1] - fld.y[0])!r}",
             f"units = {fld.units}"]
    Path(str(path) + ".hdr").write_text("\n".join(lines) + "\n")
    return path


def load_grid_field(path: str | Path) -> GridField:
    path = Path(path)
    meta = {}
    for line in Path(str(path) + ".hdr").read_text().splitlines():
        key, _, val = line.partition("=")
        meta[key.strip()] = val.strip()
    shape = tuple(int(s) for s in meta["shape"].split("x"))
    data = np.fromfile(path, dtype=np.float64).reshape(shape)
    x = float(meta["x0"]) + np.arange(shape[0]) * float(meta["dx"])
    y = float(meta["y0"]) + np.arange(shape[1]) * float(meta["dy"])
    return GridField(data, x, y, meta["domain"], meta["units"])


def save_table_csv(rows: dict, path: str | Path) -> Path:
    path = Path(path)
    lines = ["key,value"]
    for key, value in rows.items():
        lines.append(f"{key},{value!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# Riesz pressure
# ---------------------------------------------------------------------------

def riesz_pressure(u: GridField) -> GridField:
    """Pressure from the velocity alone: p_hat = -(k_l k_k / |k|^2)(u_l u_k)^,
    zero mean, so that -lap p = d_l d_k (u_l u_k) holds spectrally."""
    if not u.is_vector:
        raise ValueError("riesz_pressure needs a velocity field")
    if u.domain == "strip":
        u.check_strip_decay()
    kx, ky = u.wavenumbers()
    k2 = kx ** 2 + ky ** 2
    k2[0, 0] = 1.0
    t11 = np.fft.fft2(u.data[..., 0] * u.data[..., 0])
    t12 = np.fft.fft2(u.data[..., 0] * u.data[..., 1])
    t22 = np.fft.fft2(u.data[..., 1] * u.data[..., 1])
    p_hat = -(kx * kx * t11 + 2.0 * kx * ky * t12 + ky * ky * t22) / k2
    p_hat[0, 0] = 0.0
    p = np.real(np.fft.ifft2(p_hat))
    return GridField(p, u.x, u.y, u.domain, units="pressure")


def spectral_gradient(f: GridField):
    kx, ky = f.wavenumbers()
    c = np.fft.fft2(f.data)
    gx = np.real(np.fft.ifft2(1j * kx * c))
    gy = np.real(np.fft.ifft2(1j * ky * c))
    return gx, gy


# ---------------------------------------------------------------------------
# Littlewood-Paley shells
# ---------------------------------------------------------------------------

def _taper(rho: np.ndarray) -> np.ndarray:
    """Smooth radial step: 0 below 1/2, 1 above 1, cosine in between."""
    out = np.ones_like(rho)
    out[rho <= 0.5] = 0.0
    band = (rho > 0.5) & (rho < 1.0)
    out[band] = 0.5 * (1.0 - np.cos(TWO_PI * (rho[band] - 0.5)))
    return out


@dataclass(frozen=True)
class DyadicPartition:
    """Radial dyadic shells phi_q supported on 2^(q-1) <= |k| <= 2^(q+1) that
    sum to one on |k| >= 1, plus the complementary low block. q_max always
    reaches the grid's corner frequency so reconstruction is exact; shells
    are 'resolved' only up to the smaller axis Nyquist."""

    q_max: int
    q_resolved: int

    @classmethod
    def for_field(cls, fld: GridField) -> "DyadicPartition":
        kx, ky = fld.wavenumbers()
        corner = float(np.hypot(np.abs(kx).max(), np.abs(ky).max()))
        axis = float(min(np.abs(kx).max(), np.abs(ky).max()))
        q_max = int(np.ceil(np.log2(corner)))
        q_resolved = int(np.floor(np.log2(axis))) - 1
        return cls(q_max, q_resolved)

    def shell(self, q: int, kmag: np.ndarray) -> np.ndarray:
        if not 0 <= q <= self.q_max:
            raise ValueError(f"shell index {q} outside [0, {self.q_max}]")
        return _taper(kmag / 2 ** q) - _taper(kmag / 2 ** (q + 1))

    def low_block(self, kmag: np.ndarray) -> np.ndarray:
        return 1.0 - _taper(kmag)


def dyadic_blocks(u: GridField, partition: DyadicPartition | None = None):
    """Yields (q, block GridField) for q = 0..q_max plus (-1, low block)."""
    partition = partition or DyadicPartition.for_field(u)
    kx, ky = u.wavenumbers()
    kmag = np.hypot(kx, ky)
    comps = u.data[..., None] if not u.is_vector else u.data
    hats = [np.fft.fft2(comps[..., c]) for c in range(comps.shape[-1])]

    def make(mult):
        parts = [np.real(np.fft.ifft2(mult * h)) for h in hats]
        data = parts[0] if not u.is_vector else np.stack(parts, axis=-1)
        return GridField(data, u.x, u.y, u.domain, u.units)

    for q in range(partition.q_max + 1):
        yield q, make(partition.shell(q, kmag))
    yield -1, make(partition.low_block(kmag))


def dyadic_flux(u: GridField, partition: DyadicPartition | None = None) -> dict:
    """Per-shell values 2^q ||block_q u||_3^3 (grid quadrature L^3 norm)."""
    partition = partition or DyadicPartition.for_field(u)
    out = {}
    for q, block in dyadic_blocks(u, partition):
        if q < 0:
            continue
        out[q] = 2.0 ** q * block.lp_norm(3.0) ** 3
    return out


def plateau_ratio(flux: dict, partition: DyadicPartition) -> float:
    """max/min of the flux over the last three resolved octaves."""
    qs = [q for q in sorted(flux) if q <= partition.q_resolved][-3:]
    vals = [flux[q] for q in qs]
    return max(vals) / min(vals)


# ---------------------------------------------------------------------------
# structure function
# ---------------------------------------------------------------------------

def structure_function(u: GridField, offsets: Sequence[tuple]) -> dict:
    """Third-order structure function by exact shifted-difference sums:
    S3(y) = int |u(x - y) - u(x)|^3 dx for integer-cell offsets y."""
    out = {}
    nx, ny = u.x.size, u.y.size
    for ox, oy in offsets:
        if abs(ox) > nx // 2 or abs(oy) > ny // 2:
            raise ValueError(f"offset ({ox}, {oy}) exceeds half the domain")
        shifted = np.roll(u.data, (ox, oy), axis=(0, 1))
        diff = shifted - u.data
        mag = np.linalg.norm(diff, axis=-1) if u.is_vector else np.abs(diff)
        out[(ox, oy)] = u.integral(mag ** 3)
    return out


def offset_length(u: GridField, offset: tuple) -> float:
    lx, ly = u.lengths
    return float(np.hypot(offset[0] * lx / u.x.size, offset[1] * ly / u.y.size))


def third_order_slope(u: GridField, offsets: Sequence[tuple]) -> float:
    """Log-log slope zeta_3 of S3 against |y| over the given offsets."""
    s3 = structure_function(u, offsets)
    ys = np.array([offset_length(u, o) for o in offsets])
    vals = np.array([s3[o] for o in offsets])
    keep = vals > 0
    return float(np.polyfit(np.log(ys[keep]), np.log(vals[keep]), 1)[0])


# ---------------------------------------------------------------------------
# mollification and commutators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MollifierSpec:
    """Radially symmetric polynomial bump (1 - |y/delta|^2)^4, unit mass,
    support |y| <= delta."""

    delta: float

    def weights(self, fld: GridField):
        """Discrete stencil offsets and weights, normalized to unit mass."""
        lx, ly = fld.lengths
        dx, dy = lx / fld.x.size, ly / fld.y.size
        if self.delta < 2.0 * max(dx, dy):
            raise ValueError("mollifier scale below grid resolution")
        rx = int(np.floor(self.delta / dx))
        ry = int(np.floor(self.delta / dy))
        ox, oy = np.meshgrid(np.arange(-rx, rx + 1), np.arange(-ry, ry + 1),
                             indexing="ij")
        r2 = (ox * dx) ** 2 + (oy * dy) ** 2
        w = np.maximum(1.0 - r2 / self.delta ** 2, 0.0) ** 4
        w /= w.sum()
        keep = w > 0
        return ox[keep], oy[keep], w[keep]


def mollify(u: GridField, spec: MollifierSpec) -> GridField:
    ox, oy, w = spec.weights(u)
    out = np.zeros_like(u.data)
    for i, j, wij in zip(ox, oy, w):
        out += wij * np.roll(u.data, (i, j), axis=(0, 1))
    return GridField(out, u.x, u.y, u.domain, u.units)


def mollify_and_commutators(u: GridField, spec: MollifierSpec):
    """Mollified field plus the two commutator terms of the smoothed energy
    flux: r_delta(u, u) = int h_d(y) (u(x-y) - u(x)) (x) (u(x-y) - u(x)) dy
    and (u - u_delta) (x) (u - u_delta). Returns

        (u_delta, ||r_delta||_{3/2}, ||(u-u_d)(x)(u-u_d)||_{3/2},
         u_delta (x) u_delta as an (nx, ny, 2, 2) array).
    """
    if not u.is_vector:
        raise ValueError("needs a velocity field")
    ox, oy, w = spec.weights(u)
    u_d = np.zeros_like(u.data)
    r_d = np.zeros(u.data.shape[:2] + (2, 2))
    for i, j, wij in zip(ox, oy, w):
        shifted = np.roll(u.data, (i, j), axis=(0, 1))
        u_d += wij * shifted
        diff = shifted - u.data
        r_d += wij * (diff[..., :, None] * diff[..., None, :])
    du = u.data - u_d
    tensor_du = du[..., :, None] * du[..., None, :]
    u_d_tensor = u_d[..., :, None] * u_d[..., None, :]

    def l32(t):
        frob = np.sqrt(np.sum(t ** 2, axis=(-2, -1)))
        return u.integral(frob ** 1.5) ** (2.0 / 3.0)

    u_delta = GridField(u_d, u.x, u.y, u.domain, u.units)
    return u_delta, l32(r_d), l32(tensor_du), u_d_tensor


# ---------------------------------------------------------------------------
# weak-solution residuals
# ---------------------------------------------------------------------------

def momentum_residual(u_series: Sequence[GridField], spec: MollifierSpec,
                      p_series: Sequence[GridField] | None = None) -> np.ndarray:
    """L2 residual of d/dt u_d + div (u (x) u)_d + grad p_d per interior
    snapshot; time derivative centered, space derivatives spectral, p from
    riesz_pressure unless supplied. u_series must be (field, time) pairs."""
    if len(u_series) < 3:
        raise ValueError("need at least 3 snapshots")
    fields = [f for f, _ in u_series]
    times = [t for _, t in u_series]
    steps = np.diff(times)
    if np.abs(steps - steps[0]).max() > 1e-12:
        raise ValueError("snapshots must be uniformly spaced")
    base = fields[0]
    for f in fields[1:]:
        if f.data.shape != base.data.shape:
            raise ValueError("mismatched grids")
    if p_series is None:
        p_series = [riesz_pressure(f) for f in fields]
    out = np.empty(len(fields) - 2)
    for i in range(1, len(fields) - 1):
        dudt = (fields[i + 1].data - fields[i - 1].data) / (2.0 * steps[0])
        cur = fields[i]
        u1, u2 = cur.data[..., 0], cur.data[..., 1]
        kx, ky = cur.wavenumbers()

        def ddx(f):
            return np.real(np.fft.ifft2(1j * kx * np.fft.fft2(f)))

        def ddy(f):
            return np.real(np.fft.ifft2(1j * ky * np.fft.fft2(f)))

        px, py = spectral_gradient(p_series[i])
        r1 = dudt[..., 0] + ddx(u1 * u1) + ddy(u1 * u2) + px
        r2 = dudt[..., 1] + ddx(u1 * u2) + ddy(u2 * u2) + py
        # mollification commutes with d/dt and the spectral derivatives, so
        # smoothing the assembled residual equals assembling from smoothed terms
        resid = mollify(GridField(np.stack([r1, r2], -1), cur.x, cur.y,
                                  cur.domain), spec)
        out[i - 1] = resid.lp_norm(2.0)
    return out


@dataclass(frozen=True)
class TestFunction:
    """Smooth compactly supported scalar test function with gradient and
    time derivative; must vanish on the domain boundary band."""

    value: Callable       # (X, Y, t) -> array
    grad: Callable        # (X, Y, t) -> (dphi/dx, dphi/dy)
    dt: Callable          # (X, Y, t) -> array
    support_radius: float = np.inf
    center: tuple = (np.pi, np.pi)


def bump_test_function(center=(np.pi, np.pi), radius=2.5,
                       time_poly=(1.0,)) -> TestFunction:
    """Radial C-infinity bump exp(1 - R^2/(R^2 - r^2)) times a polynomial in
    time; polynomial degree <= 1 keeps trapezoid time quadrature exact."""
    cx, cy, R = center[0], center[1], radius
    coef = np.asarray(time_poly, dtype=float)

    def tval(t):
        return np.polyval(coef[::-1], t)

    def tder(t):
        der = coef[1:] * np.arange(1, coef.size)
        return np.polyval(der[::-1], t) if der.size else 0.0

    def profile(X, Y):
        r2 = (X - cx) ** 2 + (Y - cy) ** 2
        out = np.zeros_like(X)
        # shrink the support test slightly so 1/(R^2 - r^2) cannot overflow
        inside = r2 < R ** 2 * (1.0 - 1e-9)
        out[inside] = np.exp(1.0 - R ** 2 / (R ** 2 - r2[inside]))
        return out, r2, inside

    def value(X, Y, t):
        out, _, _ = profile(X, Y)
        return out * tval(t)

    def grad(X, Y, t):
        out, r2, inside = profile(X, Y)
        f = np.zeros_like(X)
        f[inside] = out[inside] * (-R ** 2) / (R ** 2 - r2[inside]) ** 2
        return (f * 2.0 * (X - cx) * tval(t), f * 2.0 * (Y - cy) * tval(t))

    def dt(X, Y, t):
        out, _, _ = profile(X, Y)
        return out * tder(t)

    return TestFunction(value, grad, dt, radius, center)


def energy_balance_residual(u_series: Sequence[tuple], p_series: Sequence[GridField],
                            phi: TestFunction, t_lo: float, t_hi: float,
                            eps_floor: float = 1.0):
    """Local energy balance tested against phi on [t_lo, t_hi]:

        lhs = int |u|^2 phi |_(t_hi) - int |u|^2 phi |_(t_lo)
              - int int |u|^2 dphi/dt
        rhs = int int (|u|^2 + 2 p) u . grad phi

    Grid quadrature in space, trapezoid in time over the snapshots inside
    [t_lo, t_hi]. Returns (lhs, rhs, |lhs - rhs| / max(|lhs|, |rhs|, floor)).
    """
    if len(p_series) != len(u_series):
        raise ValueError("p_series must align with u_series")
    keep = [i for i, (_, t) in enumerate(u_series)
            if t_lo - 1e-12 <= t <= t_hi + 1e-12]
    fields = [u_series[i] for i in keep]
    p_series = [p_series[i] for i in keep]
    if len(fields) < 2:
        raise ValueError("need at least two snapshots inside [t_lo, t_hi]")
    base = fields[0][0]
    X, Y = np.meshgrid(base.x, base.y, indexing="ij")
    lx, ly = base.lengths
    if phi.support_radius < np.inf:
        margin = min(phi.center[0], phi.center[1],
                     lx - phi.center[0], ly - phi.center[1])
        if phi.support_radius > margin:
            raise ValueError("test-function support exceeds the domain")
    times = np.array([t for _, t in fields])
    wt = np.empty(times.size)
    wt[1:-1] = 0.5 * (times[2:] - times[:-2])
    wt[0] = 0.5 * (times[1] - times[0])
    wt[-1] = 0.5 * (times[-1] - times[-2])

    def usq(f):
        return np.sum(f.data ** 2, axis=-1)

    first, last = fields[0][0], fields[-1][0]
    lhs = (first.integral(usq(last) * phi.value(X, Y, times[-1]))
           - first.integral(usq(first) * phi.value(X, Y, times[0])))
    rhs = 0.0
    for (f, t), w, p in zip(fields, wt, p_series):
        gx, gy = phi.grad(X, Y, t)
        lhs -= w * f.integral(usq(f) * phi.dt(X, Y, t))
        rhs += w * f.integral((usq(f) + 2.0 * p.data) *
                              (f.data[..., 0] * gx + f.data[..., 1] * gy))
    residual = abs(lhs - rhs) / max(abs(lhs), abs(rhs), eps_floor)
    return lhs, rhs, residual
