"""Accessible sets, the integral identity behind the rigidity of vertical
curves, infinitesimal rigidity probes, and the null-variation identity.

D-curves in the Engel-Darboux chart are generated from controls (u, v):

    x' = u,  y' = z u,  z' = w u,  w' = v,

so tangency to the pair of defining 1-forms holds structurally; the long
chart variant replaces w by an angle.  Curves with w = t from the origin land
in the accessible cone y > z^2 / (2w), and the only way to keep y(T) = 0 is
to be the vertical W-curve itself.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from ._kernels import dcurve_rk4
from .errors import NotNull, SingularIntegrand, StepTooLarge, VariationNotDCurve
from .geometry_models import ConformalSurface, unit_tangent_frames


class AccessRegion(Enum):
    APlus = "A+"
    AMinus = "A-"
    AW = "AW"
    Outside = "outside"


def accessible_membership(p: np.ndarray) -> AccessRegion:
    """Locate a chart point relative to the accessible set from the origin.

    The x-coordinate is irrelevant for the open regions; the axis region
    requires x = y = z = 0.
    """
    x, y, z, w = (float(v) for v in p)
    if max(abs(x), abs(y), abs(z)) < 1e-12:
        return AccessRegion.AW
    if w > 0 and y > z * z / (2.0 * w):
        return AccessRegion.APlus
    if w < 0 and y < z * z / (2.0 * w):
        return AccessRegion.AMinus
    return AccessRegion.Outside


def boundary_cone_value(p: np.ndarray) -> float:
    """z^2 - 2 y w: zero on the boundary cone, negative strictly inside."""
    _, y, z, w = (float(v) for v in p)
    return z * z - 2.0 * y * w


# ---------------------------------------------------------------------------
# D-curves
# ---------------------------------------------------------------------------

@dataclass
class DCurve:
    times: np.ndarray
    points: np.ndarray            # (n, 4): (x, y, z, w) or (x, y, z, theta)
    controls: tuple               # (u, v) callables
    long_chart: bool = False

    def tangency_residual(self) -> float:
        """Midpoint residuals of the defining 1-forms along the samples."""
        p = self.points
        dx = np.diff(p[:, 0])
        dy = np.diff(p[:, 1])
        dz = np.diff(p[:, 2])
        zm = 0.5 * (p[:-1, 2] + p[1:, 2])
        r1 = dy - zm * dx
        if self.long_chart:
            tm = 0.5 * (p[:-1, 3] + p[1:, 3])
            r2 = np.cos(tm) * dz - np.sin(tm) * dx
        else:
            wm = 0.5 * (p[:-1, 3] + p[1:, 3])
            r2 = dz - wm * dx
        return float(max(np.abs(r1).max(initial=0.0), np.abs(r2).max(initial=0.0)))


def _controls_on_half_grid(controls, T: float, dt: float):
    u, v = controls
    nsteps = max(1, int(round(T / dt)))
    tgrid = np.linspace(0.0, T, 2 * nsteps + 1)
    uh = np.atleast_1d(np.asarray(u(tgrid), dtype=float))
    vh = np.atleast_1d(np.asarray(v(tgrid), dtype=float))
    uh = np.broadcast_to(uh, tgrid.shape)
    vh = np.broadcast_to(vh, tgrid.shape)
    return nsteps, uh, vh


def sample_d_curve(controls, T: float, dt: float,
                   start=(0.0, 0.0, 0.0, 0.0), long_chart: bool = False) -> DCurve:
    """Integrate the control ODE; tangency holds by construction."""
    if dt <= 0 or T <= 0:
        raise StepTooLarge("T and dt must be positive")
    if dt > T:
        raise StepTooLarge("dt exceeds the curve length")
    nsteps, uh, vh = _controls_on_half_grid(controls, T, dt)
    pts = dcurve_rk4(uh[None, :], vh[None, :], np.asarray(start, dtype=float)[None, :],
                     T / nsteps, long_chart=long_chart)[0]
    times = np.linspace(0.0, T, nsteps + 1)
    return DCurve(times=times, points=pts, controls=tuple(controls),
                  long_chart=long_chart)


def sample_d_curves_batch(u_values: np.ndarray, v_values: np.ndarray,
                          T: float, dt: float, start=None,
                          long_chart: bool = False) -> np.ndarray:
    """Batched variant: control values already on the half-step grid."""
    nsteps = (u_values.shape[1] - 1) // 2
    B = u_values.shape[0]
    if start is None:
        start = np.zeros((B, 4))
    return dcurve_rk4(u_values, v_values, start, T / nsteps, long_chart=long_chart)


# ---------------------------------------------------------------------------
# Inaba's integral identity
# ---------------------------------------------------------------------------

def inaba_identity_check(c: DCurve) -> float:
    """Residual of y(T) = z^2/(2w) |_T + int_0^T z^2 / (2 w^2) dt.

    Requires the w = t parameterization from the origin; the integrand's
    limit at t = 0+ is zero for admissible controls (u = O(t)) and the first
    node uses that limit value.
    """
    t = c.times
    p = c.points
    if abs(p[0, 3]) > 1e-12 or np.abs(p[0, :3]).max() > 1e-12:
        raise SingularIntegrand("identity needs a curve from the origin with w=t")
    if np.abs(p[:, 3] - t).max() > 1e-9:
        raise SingularIntegrand("identity needs the w = t parameterization (v = 1)")
    z = p[:, 2]
    w = p[:, 3]
    ratio = np.zeros_like(z)
    ratio[1:] = z[1:] / w[1:]
    head = slice(1, min(10, len(t)))
    if np.abs(ratio[head]).max(initial=0.0) > 0.1:
        raise SingularIntegrand("z/w does not vanish as t -> 0+")
    integrand = 0.5 * ratio ** 2
    integral = np.trapezoid(integrand, t)
    T = t[-1]
    return float(abs(p[-1, 1] - z[-1] ** 2 / (2.0 * T) - integral))


# ---------------------------------------------------------------------------
# accessible-set and rigidity probes
# ---------------------------------------------------------------------------

def random_admissible_controls(rng: np.random.Generator, n_modes: int = 3,
                               amplitude: float = 1.0):
    """Smooth u with u(t) = O(t) near zero (and v = 1), for the w = t class."""
    coeffs = rng.uniform(-amplitude, amplitude, size=n_modes)
    freqs = rng.integers(1, 4, size=n_modes)

    def u(t):
        t = np.atleast_1d(t)
        out = np.zeros_like(t, dtype=float)
        for a, f in zip(coeffs, freqs):
            out += a * t * np.cos(np.pi * f * t)
        return out

    return u, (lambda t: np.ones_like(np.atleast_1d(t), dtype=float))


def rigidity_probe(T: float = 1.0, n_trials: int = 1000, dt: float = 1e-3,
                   seed: int = 0, eps_grid: Sequence[float] = None,
                   n_modes: int = 3, amplitude: float = 1.0) -> dict:
    """Two experiments behind the rigidity of W-curves.

    (a) every admissible nontrivial D-curve from the origin ends strictly
    inside the cone (region A+); (b) along the family u = eps sin(pi t),
    |y(T)| = O(eps^2) while sup |z| = O(eps), so forcing y(T) to zero forces
    the curve onto the W-axis.
    """
    rng = np.random.default_rng(seed)
    nsteps = max(1, int(round(T / dt)))
    tgrid = np.linspace(0.0, T, 2 * nsteps + 1)
    U = np.empty((n_trials, tgrid.size))
    V = np.ones_like(U)
    for i in range(n_trials):
        u, _ = random_admissible_controls(rng, n_modes=n_modes, amplitude=amplitude)
        U[i] = u(tgrid)
    paths = sample_d_curves_batch(U, V, T, dt)
    ends = paths[:, -1, :]
    regions = [accessible_membership(e).value for e in ends]
    cone = np.array([boundary_cone_value(e) for e in ends])

    eps_grid = np.array([0.4 / 2 ** k for k in range(8)]) if eps_grid is None else np.asarray(eps_grid)
    sweep = []
    for eps in eps_grid:
        u = lambda t, e=eps: e * np.sin(np.pi * np.atleast_1d(t))
        c = sample_d_curve((u, lambda t: np.ones_like(np.atleast_1d(t))), T, dt)
        sweep.append({
            "eps": float(eps),
            "abs_yT": float(abs(c.points[-1, 1])),
            "sup_z": float(np.abs(c.points[:, 2]).max()),
            "cone_value": boundary_cone_value(c.points[-1]),
        })
    y_over_eps2 = [s["abs_yT"] / s["eps"] ** 2 for s in sweep]
    z_over_eps = [s["sup_z"] / s["eps"] for s in sweep]
    return {
        "n_trials": int(n_trials),
        "T": float(T),
        "regions": {r: regions.count(r) for r in sorted(set(regions))},
        "n_outside_accessible": int(sum(r not in ("A+", "AW") for r in regions)),
        "max_cone_value": float(cone.max()),
        "sweep": sweep,
        "y_over_eps2": [float(v) for v in y_over_eps2],
        "z_over_eps": [float(v) for v in z_over_eps],
    }


# ---------------------------------------------------------------------------
# infinitesimal rigidity (LSF / IWR)
# ---------------------------------------------------------------------------

def bump_profile(eps: float = 1.0):
    """(f, f', f'') with f = (1 - (x/eps)^2)^4 on [-eps, eps], sup |f| = 1."""
    def f(x):
        xi = np.clip(np.atleast_1d(x) / eps, -1.0, 1.0)
        return (1.0 - xi ** 2) ** 4

    def fp(x):
        xi = np.clip(np.atleast_1d(x) / eps, -1.0, 1.0)
        return -8.0 * xi * (1.0 - xi ** 2) ** 3 / eps

    def fpp(x):
        xi = np.clip(np.atleast_1d(x) / eps, -1.0, 1.0)
        return (-8.0 * (1.0 - xi ** 2) ** 3 + 48.0 * xi ** 2 * (1.0 - xi ** 2) ** 2) / eps ** 2

    return f, fp, fpp


def infinitesimal_rigidity_check(kind: str, *, length: float = 4.71238898038469,
                                 perturbation: Callable = None,
                                 profile: tuple = None,
                                 ds: float = 1e-4, dt: float = 1e-3,
                                 tangency_tol: float = 1e-6) -> dict:
    """First-order escape of a variation through D-curves from E.

    ``kind == "w_curve"``: the base is the vertical curve (0, 0, 0, theta) in
    the long chart up to ``length``; the variation scales a control
    perturbation by s with the starting end fixed.  The derivative
    d y / d s (0, .) must vanish (IWR), regardless of the projective length.

    ``kind == "transverse"``: the base is the x-axis segment, deformed
    through the 2-jet graphs of s f(x); |d y / d s| reaches sup |f| (LSF).

    Richardson extrapolation over the central difference in s; residuals of
    the deformed curves are checked against ``tangency_tol``.
    """
    if kind == "w_curve":
        g = perturbation if perturbation is not None else (
            lambda t: np.sin(2.0 * np.atleast_1d(t)) + 0.5 * np.cos(3.0 * np.atleast_1d(t)))
        norm = None

        def y_of(s):
            # the s^2 term breaks the even parity of y in s, so the central
            # difference genuinely measures a small quantity instead of an
            # exact cancellation; the first-order field is still s*g
            u = lambda t: (s * np.asarray(g(t), dtype=float)
                           + s * s * np.asarray(g(t), dtype=float) ** 2)
            v = lambda t: np.ones_like(np.atleast_1d(t), dtype=float)
            c = sample_d_curve((u, v), length, dt, long_chart=True)
            if c.tangency_residual() > tangency_tol:
                raise VariationNotDCurve("deformed curve left the D-curve class")
            return c.points[:, 1]

        tgrid = np.linspace(0.0, length, max(1, int(round(length / dt))) + 1)
        norm = float(np.abs(np.asarray(g(tgrid), dtype=float)).max())
        if norm == 0.0:
            return {"max_dy_ds": 0.0, "norm": 0.0, "per_time": np.zeros_like(tgrid)}
        d1 = (y_of(ds) - y_of(-ds)) / (2 * ds)
        d2 = (y_of(ds / 2) - y_of(-ds / 2)) / ds
        deriv = (4.0 * d2 - d1) / 3.0
        return {"max_dy_ds": float(np.abs(deriv).max()), "norm": norm,
                "per_time": deriv}

    if kind == "transverse":
        f, fp, fpp = profile if profile is not None else bump_profile(1.0)
        xs = np.linspace(-1.0, 1.0, max(3, int(round(2.0 / dt)) + 1))
        fx = np.asarray(f(xs), dtype=float)
        norm = float(np.abs(fx).max())

        def curve(s):
            return np.stack([xs, s * fx, s * np.asarray(fp(xs), dtype=float),
                             s * np.asarray(fpp(xs), dtype=float)], axis=1)

        for s in (ds, -ds):
            c = DCurve(times=xs, points=curve(s), controls=(None, None))
            if c.tangency_residual() > max(tangency_tol, 10 * abs(s) * dt ** 2):
                raise VariationNotDCurve("jet-graph variation failed tangency")
        deriv = (curve(ds)[:, 1] - curve(-ds)[:, 1]) / (2 * ds)
        return {"max_dy_ds": float(np.abs(deriv).max()), "norm": norm,
                "per_time": deriv}

    raise ValueError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# null-variation identity
# ---------------------------------------------------------------------------

def null_variation_check(surface: ConformalSurface, p0=(0.0, 0.0, 0.3),
                         T: float = 3.0, dt: float = 1e-3,
                         eta: Callable = None, ds: float = 1e-4,
                         null_tol: float = 1e-8) -> dict:
    """max_t |dg(beta', dB/ds)| for a variation through null curves.

    The base is a null geodesic of (Sigma x S^1, dh - dtheta^2): a unit-speed
    geodesic on the surface with theta = t.  The variation moves the surface
    curve by s eta(t) and lifts each neighbor as a null curve (theta = metric
    arclength), so the null constraint holds by construction and is
    monitored.  The identity holds because the first term of the variational
    computation dies with the geodesic equation and the second is the
    s-derivative of the (vanishing) null defect.
    """
    from .characteristic_dynamics import _rk4_path

    ut = unit_tangent_frames(surface)
    X = ut.model.frame[0]
    times, pts3 = _rk4_path(lambda p: X(p), np.asarray(p0, dtype=float), T, dt)
    xy = pts3[:, :2]
    phi = pts3[:, 2]
    lam = surface.lam_at(xy)
    beta_dot = (lam ** -0.5)[:, None] * np.stack([np.cos(phi), np.sin(phi)], axis=-1)

    if eta is None:
        eta = lambda t: np.stack(
            [np.sin(np.pi * np.atleast_1d(t) / T),
             1.0 - np.cos(2 * np.pi * np.atleast_1d(t) / T)], axis=-1)
    eta_t = np.atleast_2d(eta(times))
    if np.abs(eta_t[0]).max() > 1e-12:
        raise NotNull("variation must fix the starting point")

    def theta_of(s):
        curve = xy + s * eta_t
        vel = np.gradient(curve, dt, axis=0)
        speed = np.sqrt(surface.lam_at(curve) * (vel ** 2).sum(axis=1))
        theta = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * dt)])
        # null defect of the lifted curve: dh(B', B') - (theta')^2
        thdot = np.gradient(theta, dt)
        defect = surface.lam_at(curve) * (vel ** 2).sum(axis=1) - thdot ** 2
        interior = slice(2, -2)
        if np.abs(defect[interior]).max() > max(null_tol, 1e3 * dt ** 2):
            raise NotNull("null constraint drifted beyond tolerance")
        return theta

    dtheta_ds = (theta_of(ds) - theta_of(-ds)) / (2 * ds)
    pairing = lam * np.einsum("ni,ni->n", beta_dot, eta_t) - dtheta_ds
    interior = slice(2, -2)
    return {
        "t": times,
        "pairing": pairing,
        "residual_max": float(np.abs(pairing[interior]).max()),
    }
