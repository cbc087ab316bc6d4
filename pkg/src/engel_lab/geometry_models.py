"""Surfaces, unit tangent bundles, and the two Lorentzian extensions.

A surface is a conformal chart: metric lambda(x, y) (dx^2 + dy^2) on a box.
Its unit tangent bundle gets the chart (x, y, phi) where phi is the fiber
angle measured against the coordinate frame orthonormalized by lambda^(1/2);
with that convention the vertical field is exactly d/dphi and the canonical
horizontal fields satisfy

    [Z, X] = Y,   [Z, Y] = -X,   [X, Y] = kappa Z.

Constant-curvature models exist twice: as exact Lie models (for closed-form
holonomy) and as chart realizations via lambda = 4 / (1 + kappa r^2)^2, so
the exact and numerical paths cross-validate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .config import DEFAULTS
from .errors import ConfigError, NonFiniteEvaluation, SignatureError
from .frame_algebra import ChartModel, ChartVectorField, LieModel

TWO_PI = 2.0 * np.pi


@dataclass
class ConformalSurface:
    """Metric lambda (dx^2 + dy^2) on a chart box in R^2.

    ``dlog``/``d2log`` are optional analytic derivatives of log(lambda):
    dlog(pts) -> (..., 2) and d2log(pts) -> (..., 3) ordered (xx, xy, yy).
    When absent, central differences with steps from the numeric config are
    used.
    """

    lam: Callable[[np.ndarray], np.ndarray]
    box: np.ndarray
    dlog: Optional[Callable] = None
    d2log: Optional[Callable] = None
    periodic: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=float)

    def lam_at(self, pts: np.ndarray) -> np.ndarray:
        val = np.asarray(self.lam(np.atleast_2d(pts)), dtype=float)
        if np.any(~np.isfinite(val)) or np.any(val <= 0):
            raise NonFiniteEvaluation("conformal factor must be finite and positive")
        return val

    def dlog_at(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.dlog is not None:
            return np.asarray(self.dlog(pts), dtype=float)
        h = DEFAULTS.h
        out = np.empty(pts.shape)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            out[:, j] = (np.log(self.lam_at(pts + e)) - np.log(self.lam_at(pts - e))) / (2 * h)
        return out

    def d2log_at(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.d2log is not None:
            return np.asarray(self.d2log(pts), dtype=float)
        h = DEFAULTS.h_hess
        f = lambda q: np.log(self.lam_at(q))
        ex, ey = np.array([h, 0.0]), np.array([0.0, h])
        f0 = f(pts)
        fxx = (f(pts + ex) - 2 * f0 + f(pts - ex)) / h ** 2
        fyy = (f(pts + ey) - 2 * f0 + f(pts - ey)) / h ** 2
        fxy = (f(pts + ex + ey) - f(pts + ex - ey)
               - f(pts - ex + ey) + f(pts - ex - ey)) / (4 * h ** 2)
        return np.stack([fxx, fxy, fyy], axis=-1)


def gauss_curvature(s: ConformalSurface, p: np.ndarray) -> Union[float, np.ndarray]:
    """kappa = -Laplace(log lambda) / (2 lambda)."""
    pts = np.atleast_2d(np.asarray(p, dtype=float))
    d2 = s.d2log_at(pts)
    lam = s.lam_at(pts)
    k = -(d2[:, 0] + d2[:, 2]) / (2.0 * lam)
    if not np.all(np.isfinite(k)):
        raise NonFiniteEvaluation("curvature evaluation produced NaN or inf")
    return float(k[0]) if np.asarray(p).ndim == 1 else k


# ---------------------------------------------------------------------------
# surface catalog
# ---------------------------------------------------------------------------

def flat_surface(half: float = np.pi, periodic: bool = True) -> ConformalSurface:
    per = {0: 2 * half, 1: 2 * half} if periodic else {}
    return ConformalSurface(
        lam=lambda pts: np.ones(np.atleast_2d(pts).shape[0]),
        dlog=lambda pts: np.zeros(np.atleast_2d(pts).shape),
        d2log=lambda pts: np.zeros((np.atleast_2d(pts).shape[0], 3)),
        box=[[-half, half], [-half, half]],
        periodic=per,
        name="flat")


def constant_curvature_surface(kappa: float, half: float = None) -> ConformalSurface:
    """lambda = 4 / (1 + kappa r^2)^2 has Gauss curvature kappa.

    For kappa < 0 the chart must stay inside r^2 < -1/kappa; the default box
    keeps a comfortable margin.
    """
    kappa = float(kappa)
    if kappa == 0.0:
        s = flat_surface(half=half if half is not None else np.pi)
        return s
    if half is None:
        # kappa < 0 charts must stay inside r < 1/sqrt(-kappa); the box is
        # sized so its corners keep a 4% margin, wide enough for length-5
        # projected null geodesics (horocycles reach r ~ 0.8 r_sing)
        half = 1.2 if kappa > 0 else 0.68 / np.sqrt(-kappa)

    def lam(pts):
        pts = np.atleast_2d(pts)
        r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        return 4.0 / (1.0 + kappa * r2) ** 2

    def dlog(pts):
        pts = np.atleast_2d(pts)
        r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        g = -4.0 * kappa / (1.0 + kappa * r2)
        return np.stack([g * pts[:, 0], g * pts[:, 1]], axis=-1)

    def d2log(pts):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        q = 1.0 + kappa * (x * x + y * y)
        fxx = -4.0 * kappa / q + 8.0 * kappa ** 2 * x * x / q ** 2
        fyy = -4.0 * kappa / q + 8.0 * kappa ** 2 * y * y / q ** 2
        fxy = 8.0 * kappa ** 2 * x * y / q ** 2
        return np.stack([fxx, fxy, fyy], axis=-1)

    name = {1.0: "sphere", -1.0: "disk"}.get(kappa, f"constant({kappa:g})")
    return ConformalSurface(lam=lam, dlog=dlog, d2log=d2log,
                            box=[[-half, half], [-half, half]], name=name)


def bump_surface(a: float = 0.7, s: float = 0.9, half: float = 0.8) -> ConformalSurface:
    """log(lambda) = a exp(-r^2 / (2 s^2)): smooth variable curvature."""
    s2 = float(s) ** 2

    def g(pts):
        pts = np.atleast_2d(pts)
        return a * np.exp(-(pts[:, 0] ** 2 + pts[:, 1] ** 2) / (2 * s2))

    def lam(pts):
        return np.exp(g(pts))

    def dlog(pts):
        pts = np.atleast_2d(pts)
        gg = g(pts)
        return np.stack([gg * (-pts[:, 0] / s2), gg * (-pts[:, 1] / s2)], axis=-1)

    def d2log(pts):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        gg = g(pts)
        fxx = gg * (x * x / s2 ** 2 - 1.0 / s2)
        fyy = gg * (y * y / s2 ** 2 - 1.0 / s2)
        fxy = gg * (x * y / s2 ** 2)
        return np.stack([fxx, fxy, fyy], axis=-1)

    return ConformalSurface(lam=lam, dlog=dlog, d2log=d2log,
                            box=[[-half, half], [-half, half]], name="bump")


def table_surface(xs, ys, lam_grid, name: str = "table") -> ConformalSurface:
    """Surface from a sampled conformal factor; a bicubic spline supplies the
    log-lambda derivatives."""
    from scipy.interpolate import RectBivariateSpline

    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    grid = np.log(np.asarray(lam_grid, dtype=float))
    sp = RectBivariateSpline(xs, ys, grid, kx=3, ky=3)

    def lam(pts):
        pts = np.atleast_2d(pts)
        return np.exp(sp.ev(pts[:, 0], pts[:, 1]))

    def dlog(pts):
        pts = np.atleast_2d(pts)
        return np.stack([sp.ev(pts[:, 0], pts[:, 1], dx=1),
                         sp.ev(pts[:, 0], pts[:, 1], dy=1)], axis=-1)

    def d2log(pts):
        pts = np.atleast_2d(pts)
        return np.stack([sp.ev(pts[:, 0], pts[:, 1], dx=2),
                         sp.ev(pts[:, 0], pts[:, 1], dx=1, dy=1),
                         sp.ev(pts[:, 0], pts[:, 1], dy=2)], axis=-1)

    return ConformalSurface(lam=lam, dlog=dlog, d2log=d2log,
                            box=[[xs[0], xs[-1]], [ys[0], ys[-1]]], name=name)


_CATALOG = {
    "flat": lambda params: flat_surface(**params),
    "sphere": lambda params: constant_curvature_surface(1.0, **params),
    "disk": lambda params: constant_curvature_surface(-1.0, **params),
    "constant": lambda params: constant_curvature_surface(**params),
    "bump": lambda params: bump_surface(**params),
}


def surface_from_config(cfg: dict) -> ConformalSurface:
    """Build a surface from a declarative config entry.

    ``{"catalog": "constant", "params": {"kappa": -0.5}}`` or
    ``{"table": {"xs": [...], "ys": [...], "lam": [[...]]}}``.
    """
    if "catalog" in cfg:
        kind = cfg["catalog"]
        if kind not in _CATALOG:
            raise ConfigError(f"unknown surface {kind!r}; have {sorted(_CATALOG)}")
        return _CATALOG[kind](cfg.get("params", {}))
    if "table" in cfg:
        t = cfg["table"]
        return table_surface(t["xs"], t["ys"], t["lam"], name=cfg.get("name", "table"))
    raise ConfigError("surface config needs a 'catalog' or 'table' entry")


# ---------------------------------------------------------------------------
# unit tangent bundles
# ---------------------------------------------------------------------------

@dataclass
class UnitTangentChart:
    """Chart model (x, y, phi) of S^1(T Sigma) with frame (X, Y, Z)."""

    surface: ConformalSurface
    model: ChartModel


def unit_tangent_frames(s: ConformalSurface) -> UnitTangentChart:
    """Horizontal/vertical frame on S^1(T Sigma).

    X is the horizontal lift of the tautological unit vector, Y of its
    rotate by +pi/2, Z = d/dphi.  The connection coefficient enters through
    u = log(lambda)/2:  lift(v) = v + (u_y v_x - u_x v_y) d/phi.
    """
    def ut(pts):
        pts = np.atleast_2d(pts)
        xy = pts[:, :2]
        lam = s.lam_at(xy)
        du = 0.5 * s.dlog_at(xy)
        return lam, du[:, 0], du[:, 1], pts[:, 2]

    def X_comp(pts):
        lam, ux, uy, phi = ut(pts)
        sc = lam ** -0.5
        c, si = np.cos(phi), np.sin(phi)
        return np.stack([sc * c, sc * si, sc * (uy * c - ux * si)], axis=-1)

    def Y_comp(pts):
        lam, ux, uy, phi = ut(pts)
        sc = lam ** -0.5
        c, si = np.cos(phi), np.sin(phi)
        return np.stack([-sc * si, sc * c, -sc * (uy * si + ux * c)], axis=-1)

    def Z_comp(pts):
        pts = np.atleast_2d(pts)
        out = np.zeros((pts.shape[0], 3))
        out[:, 2] = 1.0
        return out

    def Z_jac(pts):
        return np.zeros((np.atleast_2d(pts).shape[0], 3, 3))

    X = ChartVectorField(3, X_comp, name="X")
    Y = ChartVectorField(3, Y_comp, name="Y")
    Z = ChartVectorField(3, Z_comp, jacobian=Z_jac, name="Z")
    box = np.vstack([s.box, [0.0, TWO_PI]])
    periodic = {int(k): v for k, v in s.periodic.items()}
    periodic[2] = TWO_PI
    model = ChartModel(3, box, [X, Y, Z], periodic=periodic,
                       name=f"S1T({s.name})")
    return UnitTangentChart(surface=s, model=model)


@dataclass
class ConstantCurvatureUT:
    """Exact Lie model of S^1(T Sigma) for constant curvature kappa."""

    kappa: float
    lie: LieModel = None

    def __post_init__(self):
        k = float(self.kappa)
        c = np.zeros((3, 3, 3))
        # frame order (X, Y, Z)
        c[1, 2, 0], c[1, 0, 2] = 1.0, -1.0     # [Z, X] = Y
        c[0, 2, 1], c[0, 1, 2] = -1.0, 1.0     # [Z, Y] = -X
        c[2, 0, 1], c[2, 1, 0] = k, -k         # [X, Y] = kappa Z
        self.lie = LieModel(("X", "Y", "Z"), c, curvature_parameter=k)

    def chart(self, half: float = None) -> UnitTangentChart:
        return unit_tangent_frames(constant_curvature_surface(self.kappa, half=half))


# ---------------------------------------------------------------------------
# Lorentzian extensions
# ---------------------------------------------------------------------------

@dataclass
class LorentzExtension:
    """A Lorentzian 3-manifold built from a surface, together with the frame
    data of its null-circle bundle M.

    For the product kind V = Sigma x S^1 and the M-frame is (X, Y, Z, Theta)
    with pullback metric diag(1, 1, 0, -1); for the magnetic kind
    V = S^1(T Sigma) with dg = dh + (-dtheta^2) across the horizontal/vertical
    splitting, the M-frame is the rotated (Xt, Yt, Zt, Theta) and the pullback
    metric is diag(1, 1, -1, 0).  In both V-frames the metric is diag(1,1,-1).
    """

    kind: str
    base: Union[UnitTangentChart, ConstantCurvatureUT]
    model: Union[ChartModel, LieModel]
    kappa: Union[float, Callable]
    m_metric_diag: np.ndarray
    v_metric: np.ndarray

    def kappa_at(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if callable(self.kappa):
            return np.asarray(self.kappa(pts), dtype=float)
        return np.full(pts.shape[0], float(self.kappa))

    def pullback_inner(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pullback metric on frame-coefficient vectors over the M-frame."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return np.einsum("...i,i,...i->...", a, self.m_metric_diag, b)

    def check_signature(self, n_samples: int = 100) -> bool:
        ev = np.linalg.eigvalsh(self.v_metric)
        if not (np.sum(ev > 0) == 2 and np.sum(ev < 0) == 1):
            raise SignatureError("V-frame metric is not of signature (+,+,-)")
        return True


def _embed3(vec3, n):
    out = np.zeros((n, 4))
    out[:, :3] = vec3
    return out


def product_extension(ut: Union[UnitTangentChart, ConstantCurvatureUT]) -> LorentzExtension:
    """(Sigma, dh) x (S^1, -dtheta^2); M = S^1(T Sigma) x S^1.

    Theta commutes with X, Y, Z; the null line over (sigma, theta) in the
    v-direction is <v + d/dtheta>.
    """
    if isinstance(ut, ConstantCurvatureUT):
        k = ut.kappa
        c = np.zeros((4, 4, 4))
        c[:3, :3, :3] = ut.lie.c
        lie = LieModel(("X", "Y", "Z", "Theta"), c, curvature_parameter=k)
        return LorentzExtension(
            kind="product", base=ut, model=lie, kappa=k,
            m_metric_diag=np.array([1.0, 1.0, 0.0, -1.0]),
            v_metric=np.diag([1.0, 1.0, -1.0]))

    surface = ut.surface
    X3, Y3, Z3 = ut.model.frame

    def lift(f3):
        def comp(pts):
            pts = np.atleast_2d(pts)
            return _embed3(np.atleast_2d(f3(pts[:, :3])), pts.shape[0])
        return comp

    def theta_comp(pts):
        pts = np.atleast_2d(pts)
        out = np.zeros((pts.shape[0], 4))
        out[:, 3] = 1.0
        return out

    X = ChartVectorField(4, lift(X3), name="X")
    Y = ChartVectorField(4, lift(Y3), name="Y")
    Z = ChartVectorField(4, lift(Z3),
                         jacobian=lambda pts: np.zeros((np.atleast_2d(pts).shape[0], 4, 4)),
                         name="Z")
    Theta = ChartVectorField(4, theta_comp,
                             jacobian=lambda pts: np.zeros((np.atleast_2d(pts).shape[0], 4, 4)),
                             name="Theta")
    box = np.vstack([ut.model.box, [0.0, TWO_PI]])
    periodic = {int(kk): v for kk, v in ut.model.periodic.items()}
    periodic[3] = TWO_PI
    model = ChartModel(4, box, [X, Y, Z, Theta], periodic=periodic,
                       name=f"product({surface.name})")
    return LorentzExtension(
        kind="product", base=ut, model=model,
        kappa=lambda pts: gauss_curvature(surface, np.atleast_2d(pts)[:, :2]),
        m_metric_diag=np.array([1.0, 1.0, 0.0, -1.0]),
        v_metric=np.diag([1.0, 1.0, -1.0]))


def magnetic_extension(ut: Union[UnitTangentChart, ConstantCurvatureUT]) -> LorentzExtension:
    """dg = dh + (-dtheta^2) on V = S^1(T Sigma) across the splitting.

    The M-frame rotates the horizontal fields by the null angle theta:
    Xt = cos(theta) X + sin(theta) Y, Yt its rotate, Zt = Z, Theta vertical.
    """
    if isinstance(ut, ConstantCurvatureUT):
        k = ut.kappa
        c = np.zeros((4, 4, 4))
        # frame order (Xt, Yt, Zt, Theta)
        c[1, 2, 0], c[1, 0, 2] = 1.0, -1.0     # [Zt, Xt] = Yt
        c[0, 2, 1], c[0, 1, 2] = -1.0, 1.0     # [Zt, Yt] = -Xt
        c[2, 0, 1], c[2, 1, 0] = k, -k         # [Xt, Yt] = kappa Zt
        c[1, 3, 0], c[1, 0, 3] = 1.0, -1.0     # [Theta, Xt] = Yt
        c[0, 3, 1], c[0, 1, 3] = -1.0, 1.0     # [Theta, Yt] = -Xt
        lie = LieModel(("Xt", "Yt", "Zt", "Theta"), c, curvature_parameter=k)
        return LorentzExtension(
            kind="magnetic", base=ut, model=lie, kappa=k,
            m_metric_diag=np.array([1.0, 1.0, -1.0, 0.0]),
            v_metric=np.diag([1.0, 1.0, -1.0]))

    surface = ut.surface
    X3, Y3, Z3 = ut.model.frame

    def Xt_comp(pts):
        pts = np.atleast_2d(pts)
        th = pts[:, 3]
        v = (np.cos(th)[:, None] * np.atleast_2d(X3(pts[:, :3]))
             + np.sin(th)[:, None] * np.atleast_2d(Y3(pts[:, :3])))
        return _embed3(v, pts.shape[0])

    def Yt_comp(pts):
        pts = np.atleast_2d(pts)
        th = pts[:, 3]
        v = (-np.sin(th)[:, None] * np.atleast_2d(X3(pts[:, :3]))
             + np.cos(th)[:, None] * np.atleast_2d(Y3(pts[:, :3])))
        return _embed3(v, pts.shape[0])

    def Zt_comp(pts):
        pts = np.atleast_2d(pts)
        out = np.zeros((pts.shape[0], 4))
        out[:, 2] = 1.0
        return out

    def theta_comp(pts):
        pts = np.atleast_2d(pts)
        out = np.zeros((pts.shape[0], 4))
        out[:, 3] = 1.0
        return out

    zero_jac = lambda pts: np.zeros((np.atleast_2d(pts).shape[0], 4, 4))
    Xt = ChartVectorField(4, Xt_comp, name="Xt")
    Yt = ChartVectorField(4, Yt_comp, name="Yt")
    Zt = ChartVectorField(4, Zt_comp, jacobian=zero_jac, name="Zt")
    Theta = ChartVectorField(4, theta_comp, jacobian=zero_jac, name="Theta")
    box = np.vstack([ut.model.box, [0.0, TWO_PI]])
    periodic = {int(kk): v for kk, v in ut.model.periodic.items()}
    periodic[3] = TWO_PI
    model = ChartModel(4, box, [Xt, Yt, Zt, Theta], periodic=periodic,
                       name=f"magnetic({surface.name})")
    return LorentzExtension(
        kind="magnetic", base=ut, model=model,
        kappa=lambda pts: gauss_curvature(surface, np.atleast_2d(pts)[:, :2]),
        m_metric_diag=np.array([1.0, 1.0, -1.0, 0.0]),
        v_metric=np.diag([1.0, 1.0, -1.0]))
