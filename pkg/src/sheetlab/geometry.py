"""Periodic vortex-sheet geometry: sheets, frames, sheet measures, tube
coordinates and the cutoff families used by the verification experiments.

A sheet is a discretized 2pi-periodic curve zeta(alpha) = (x(alpha), h(alpha))
with x(alpha + 2pi) = x(alpha) + 2pi, carrying a circulation density
gamma(alpha) on a uniform alpha grid.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ._spectral import TWO_PI, deriv, eval_interpolant, uniform_alpha, upsample


class DegenerateSheetError(ValueError):
    """Raised when |zeta_alpha| collapses and the frame is undefined."""


@dataclass(frozen=True)
class VortexSheet:
    """Discretized periodic sheet: parameter grid, node positions (x, h),
    circulation density gamma per node, and the snapshot time."""

    alpha: np.ndarray
    position: np.ndarray          # (n, 2): columns x, h
    gamma: np.ndarray
    time: float = 0.0
    finite_energy: bool = False

    def __post_init__(self):
        n = self.alpha.size
        if n < 8 or n & (n - 1):
            raise ValueError(f"node count must be a power of two >= 8, got {n}")
        if self.position.shape != (n, 2) or self.gamma.shape != (n,):
            raise ValueError("position must be (n, 2) and gamma (n,)")
        expected = uniform_alpha(n)
        if not np.allclose(self.alpha, expected, atol=1e-12):
            raise ValueError("alpha must be the uniform grid on [-pi, pi)")
        if not (np.all(np.isfinite(self.position)) and np.all(np.isfinite(self.gamma))):
            raise ValueError("non-finite sheet data")
        if self.finite_energy and abs(self.circulation()) > 1e-12:
            raise ValueError(
                f"finite-energy sheet requires zero total circulation, "
                f"got {self.circulation():.3e}")

    @property
    def n(self) -> int:
        return self.alpha.size

    @property
    def dalpha(self) -> float:
        return TWO_PI / self.n

    @property
    def x(self) -> np.ndarray:
        return self.position[:, 0]

    @property
    def h(self) -> np.ndarray:
        return self.position[:, 1]

    def circulation(self) -> float:
        return float(np.sum(self.gamma) * self.dalpha)

    def is_graph(self, tol: float = 1e-6) -> bool:
        return bool(np.abs(self.x - self.alpha).max() <= tol)

    def upsampled(self, n_fine: int) -> "VortexSheet":
        """Spectrally refine the node set; x is interpolated through its
        periodic part x - alpha."""
        if n_fine == self.n:
            return self
        af = uniform_alpha(n_fine)
        pos = np.stack([af + upsample(self.x - self.alpha, n_fine),
                        upsample(self.h, n_fine)], axis=-1)
        return VortexSheet(af, pos, upsample(self.gamma, n_fine), self.time,
                           self.finite_energy)

    def point_at(self, alpha: np.ndarray) -> np.ndarray:
        """Interpolated curve point at arbitrary parameter values."""
        px = eval_interpolant(self.x - self.alpha, self.alpha[0], alpha)
        ph = eval_interpolant(self.h, self.alpha[0], alpha)
        return np.stack([np.asarray(alpha) + px, ph], axis=-1)

    def derivative_at(self, alpha: np.ndarray, order: int = 1) -> np.ndarray:
        dx = eval_interpolant(self.x - self.alpha, self.alpha[0], alpha, order)
        dh = eval_interpolant(self.h, self.alpha[0], alpha, order)
        if order == 1:
            dx = dx + 1.0
        return np.stack([dx, dh], axis=-1)


def sheet_from_functions(n: int, gamma: Callable, h: Callable | None = None,
                         time: float = 0.0, finite_energy: bool = False) -> VortexSheet:
    """Graph sheet x = alpha with h and gamma sampled from callables."""
    al = uniform_alpha(n)
    hv = np.zeros(n) if h is None else np.asarray(h(al), dtype=float)
    return VortexSheet(al, np.stack([al.copy(), hv], -1),
                       np.asarray(gamma(al), dtype=float), time, finite_energy)


@dataclass(frozen=True)
class SheetFrame:
    """Unit tangent s, positively oriented unit normal nu (= s rotated by
    +pi/2), parametrization speed |zeta_alpha|, surface-measure weights
    dsigma = |zeta_alpha| dalpha, and the volume element J = |zeta_alpha|."""

    tangent: np.ndarray
    normal: np.ndarray
    speed: np.ndarray
    dsigma: np.ndarray
    J: np.ndarray


def build_frame(sheet: VortexSheet) -> SheetFrame:
    """Frame from the spectral derivative of the trigonometric interpolant."""
    xa = 1.0 + deriv(sheet.x - sheet.alpha)
    ha = deriv(sheet.h)
    speed = np.hypot(xa, ha)
    if speed.min() < 1e-10:
        raise DegenerateSheetError(f"|zeta_alpha| = {speed.min():.3e} at a node")
    s = np.stack([xa, ha], axis=-1) / speed[:, None]
    nu = np.stack([-s[:, 1], s[:, 0]], axis=-1)
    return SheetFrame(s, nu, speed, speed * sheet.dalpha, speed)


def curvature(sheet: VortexSheet) -> np.ndarray:
    """Signed curvature, positive when the curve bends toward the normal."""
    xa = 1.0 + deriv(sheet.x - sheet.alpha)
    ha = deriv(sheet.h)
    xaa = deriv(sheet.x - sheet.alpha, 2)
    haa = deriv(sheet.h, 2)
    return (xa * haa - ha * xaa) / np.hypot(xa, ha) ** 3


@dataclass(frozen=True)
class SheetMeasure:
    """Per-node weights mu_j for the kinematic measure of the moving sheet,
    mu_j = -(d zeta/dt . nu) |zeta_alpha| dalpha."""

    mu: np.ndarray


def sheet_measure(trajectory: Sequence[VortexSheet]) -> SheetMeasure:
    """Kinematic measure weights from three consecutive snapshots at
    t - dt, t, t + dt; the node velocity is the centered difference."""
    if len(trajectory) != 3:
        raise ValueError("need snapshots at t-dt, t, t+dt")
    prev, cur, nxt = trajectory
    if prev.n != cur.n or nxt.n != cur.n:
        raise ValueError("snapshots must share the alpha grid")
    dt_f = nxt.time - cur.time
    dt_b = cur.time - prev.time
    if not (dt_f > 0 and abs(dt_f - dt_b) < 1e-12 * max(dt_f, 1.0)):
        raise ValueError("snapshots must be uniformly spaced in time")
    vel = (nxt.position - prev.position) / (2.0 * dt_f)
    frame = build_frame(cur)
    mu = -np.sum(vel * frame.normal, axis=1) * frame.speed * cur.dalpha
    return SheetMeasure(mu)


# ---------------------------------------------------------------------------
# cutoff family
# ---------------------------------------------------------------------------

def bump_profile(r: np.ndarray) -> np.ndarray:
    """Even C^2 profile: 1 on [-2, 2], 0 outside [-3, 3], quintic smoothstep
    in the transition bands."""
    a = np.abs(np.asarray(r, dtype=float))
    out = np.zeros_like(a)
    out[a <= 2.0] = 1.0
    band = (a > 2.0) & (a < 3.0)
    s = 3.0 - a[band]
    out[band] = s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)
    return out


def bump_profile_deriv(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    a = np.abs(r)
    band = (a > 2.0) & (a < 3.0)
    s = 3.0 - a[band]
    out[band] = -np.sign(r[band]) * 30.0 * s ** 2 * (s - 1.0) ** 2
    return out


def nearest_point_projection(sheet: VortexSheet, points: np.ndarray,
                             tol: float = 1e-12, max_iter: int = 50):
    """Foot parameter, signed normal distance and convergence flag for each
    point. Coarse node search, then Newton on (p - zeta(a)) . zeta_a(a) = 0;
    ties resolved by the smallest |distance|."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    # coarse pass over the nodes, x reduced mod 2pi relative to each node
    dx = pts[:, 0, None] - sheet.x[None, :]
    dx -= TWO_PI * np.round(dx / TWO_PI)
    d2 = dx ** 2 + (pts[:, 1, None] - sheet.h[None, :]) ** 2
    jmin = np.argmin(d2, axis=1)
    a = sheet.alpha[jmin] + TWO_PI * np.round((pts[:, 0] - sheet.x[jmin]) / TWO_PI)
    ok = np.ones(pts.shape[0], dtype=bool)
    for _ in range(max_iter):
        z = sheet.point_at(a)
        za = sheet.derivative_at(a, 1)
        zaa = sheet.derivative_at(a, 2)
        r = pts - z
        g = np.sum(r * za, axis=1)
        gp = -np.sum(za * za, axis=1) + np.sum(r * zaa, axis=1)
        step = np.where(np.abs(gp) > 1e-14, g / gp, 0.0)
        a = a - step
        if np.abs(step).max() < tol:
            break
    else:
        z = sheet.point_at(a)
        za = sheet.derivative_at(a, 1)
        r = pts - z
        ok = np.abs(np.sum(r * za, axis=1)) < 1e-8
    z = sheet.point_at(a)
    za = sheet.derivative_at(a, 1)
    speed = np.linalg.norm(za, axis=1)
    nu = np.stack([-za[:, 1], za[:, 0]], -1) / speed[:, None]
    r = pts - z
    hsig = np.sum(r * nu, axis=1)
    return a, hsig, ok


@dataclass
class CutoffFamily:
    """Cutoff chi_eps(x, t) = 1 - eta(H(x, t)/eps) built on the signed normal
    distance H to the sheet. chi vanishes within 2 eps of the sheet, equals 1
    beyond 3 eps, and its space/time derivatives live on the transition band.

    When built from a three-snapshot window the time derivative of H is the
    negative normal speed of the sheet at the foot point; a single snapshot
    gives a static family with dchi/dt = 0.
    """

    sheet: VortexSheet
    epsilon: float
    eta: Callable = field(default=bump_profile)
    eta_deriv: Callable = field(default=bump_profile_deriv)
    window: tuple | None = None      # (prev, next, dt) snapshots for d/dt
    ambiguity_radius: float | None = None

    def signed_distance(self, points: np.ndarray):
        """H and an out-of-tube flag (projection not trusted there)."""
        _, hsig, ok = nearest_point_projection(self.sheet, points)
        radius = self.ambiguity_radius
        if radius is None:
            radius = 6.0 * self.epsilon
        flagged = (~ok) | (np.abs(hsig) > radius)
        return hsig, flagged

    def chi(self, points: np.ndarray):
        hsig, flagged = self.signed_distance(points)
        vals = 1.0 - self.eta(hsig / self.epsilon)
        vals[flagged] = 1.0
        return vals, flagged

    def grad_chi(self, points: np.ndarray):
        a, hsig, _ = nearest_point_projection(self.sheet, points)
        za = self.sheet.derivative_at(a, 1)
        nu = np.stack([-za[:, 1], za[:, 0]], -1) / np.linalg.norm(za, axis=1)[:, None]
        coef = -self.eta_deriv(hsig / self.epsilon) / self.epsilon
        return coef[:, None] * nu

    def dchi_dt(self, points: np.ndarray):
        if self.window is None:
            return np.zeros(np.atleast_2d(points).shape[0])
        prev, nxt, dt = self.window
        a, hsig, _ = nearest_point_projection(self.sheet, points)
        za = self.sheet.derivative_at(a, 1)
        nu = np.stack([-za[:, 1], za[:, 0]], -1) / np.linalg.norm(za, axis=1)[:, None]
        vel = (nxt.point_at(a) - prev.point_at(a)) / (2.0 * dt)
        dh_dt = -np.sum(vel * nu, axis=1)
        return -self.eta_deriv(hsig / self.epsilon) / self.epsilon * dh_dt


def cutoff_family(sheet: VortexSheet | Sequence[VortexSheet], epsilon: float,
                  tube_halfwidth: float | None = None) -> CutoffFamily:
    """Cutoff family at scale epsilon; pass three snapshots to enable the
    time derivative. epsilon must fit inside the tube (eps < halfwidth / 2)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if tube_halfwidth is not None and epsilon >= 0.5 * tube_halfwidth:
        raise ValueError("epsilon must be below half the tube half-width")
    if isinstance(sheet, VortexSheet):
        return CutoffFamily(sheet, epsilon)
    prev, cur, nxt = sheet
    dt = cur.time - prev.time
    return CutoffFamily(cur, epsilon, window=(prev, nxt, dt))


# ---------------------------------------------------------------------------
# CSV serialization: one file per time, columns alpha,x,h,gamma
# ---------------------------------------------------------------------------

def sheet_filename(time: float) -> str:
    return f"sheet_t={time:.6f}.csv"


def save_sheet_csv(sheet: VortexSheet, directory: str | Path) -> Path:
    path = Path(directory) / sheet_filename(sheet.time)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "x", "h", "gamma"])
        for j in range(sheet.n):
            w.writerow([repr(sheet.alpha[j]), repr(sheet.x[j]),
                        repr(sheet.h[j]), repr(sheet.gamma[j])])
    return path


def load_sheet_csv(path: str | Path, time: float | None = None) -> VortexSheet:
    path = Path(path)
    if time is None:
        stem = path.stem
        if "t=" not in stem:
            raise ValueError(f"cannot parse time from filename {path.name}")
        time = float(stem.split("t=")[1])
    rows = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["alpha", "x", "h", "gamma"]:
            raise ValueError(f"bad header in {path.name}: {header}")
        for row in r:
            rows.append([float(v) for v in row])
    data = np.asarray(rows)
    return VortexSheet(data[:, 0], data[:, 1:3].copy(), data[:, 3], time)
