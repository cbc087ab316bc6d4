"""The four Engel constructions: Cartan, Lorentz, pre-quantum, suspension,
plus the propellor models on mapping-torus charts.

Every construction returns an :class:`~engel_lab.engel_verify.EngelStructure`
whose model carries an explicit global frame; downstream modules verify the
defining conditions numerically and analyze the Cauchy-characteristic
dynamics.  Fiber conventions: prolongation fibers use a single angle
coordinate theta; the Cartan model declares its orbit closure at pi (the
plane field repeats after a half turn), while the chart itself runs to 2*pi.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .config import DEFAULTS
from .engel_verify import EngelStructure, sample_box
from .errors import (
    ConfigError,
    CurvatureMismatch,
    EquivarianceError,
    NotContact,
    SignatureError,
    TwistMonotonicityError,
)
from .frame_algebra import (
    ChartModel,
    ChartVectorField,
    LieModel,
    Section,
    bracket_chart,
    rank_with_margin,
)
from .geometry_models import LorentzExtension, TWO_PI, constant_curvature_surface, unit_tangent_frames


# ---------------------------------------------------------------------------
# contact models
# ---------------------------------------------------------------------------

@dataclass
class ContactModel:
    """A 3-dimensional frame model with a designated contact plane field.

    ``xi`` spans the contact planes, ``transverse`` is Reeb-transverse
    (anything spanning TM/xi works), and ``legendrian_frame`` trivializes xi
    when available (required by the Cartan prolongation).
    """

    model: ChartModel
    xi: Sequence[Section]
    transverse: Section
    legendrian_frame: Optional[Sequence[Section]] = None

    def validate(self, n_samples: int = 50, tol: float = None) -> None:
        tol = DEFAULTS.rank_tol if tol is None else tol
        pts = sample_box(self.model, n_samples)
        f1 = self.xi[0].chart_field(self.model)
        f2 = self.xi[1].chart_field(self.model)
        v1 = np.atleast_2d(f1(pts))
        v2 = np.atleast_2d(f2(pts))
        br = np.atleast_2d(bracket_chart(f1, f2, pts))
        stack = np.stack([v1, v2, br], axis=1)
        rank, _ = rank_with_margin(stack, tol)
        if not np.all(rank == 3):
            raise NotContact("xi + [xi, xi] fails to have rank 3 at a sample point")


def standard_contact_r3(half: float = 2.0) -> ContactModel:
    """(R^3, ker(dy - z dx)) on a chart box, with the Legendrian frame
    (d/dx + z d/dy, d/dz)."""
    def xbar_comp(pts):
        pts = np.atleast_2d(pts)
        out = np.zeros_like(pts)
        out[:, 0] = 1.0
        out[:, 1] = pts[:, 2]
        return out

    def const3(vec):
        v = np.asarray(vec, dtype=float)
        return lambda pts: np.broadcast_to(v, np.atleast_2d(pts).shape).copy()

    zero_jac = lambda pts: np.zeros((np.atleast_2d(pts).shape[0], 3, 3))

    def xbar_jac(pts):
        J = np.zeros((np.atleast_2d(pts).shape[0], 3, 3))
        J[:, 1, 2] = 1.0
        return J

    Xbar = ChartVectorField(3, xbar_comp, jacobian=xbar_jac, name="Xbar")
    Y = ChartVectorField(3, const3([0, 1, 0]), jacobian=zero_jac, name="Y")
    Z = ChartVectorField(3, const3([0, 0, 1]), jacobian=zero_jac, name="Z")
    model = ChartModel(3, [[-half, half]] * 3, [Xbar, Y, Z], name="contact-r3")
    l1 = Section((1, 0, 0), "Xbar")
    l2 = Section((0, 0, 1), "Z")
    return ContactModel(model=model, xi=(l1, l2),
                        transverse=Section((0, 1, 0), "Y"),
                        legendrian_frame=(l1, l2))


def _lift_field(f3: ChartVectorField, dim4: int = 4) -> ChartVectorField:
    """Embed a base field into the product chart (base coords first)."""
    base_dim = f3.dim

    def comp(pts):
        pts = np.atleast_2d(pts)
        out = np.zeros((pts.shape[0], dim4))
        out[:, :base_dim] = np.atleast_2d(f3(pts[:, :base_dim]))
        return out

    return ChartVectorField(dim4, comp, name=f3.name)


def _const_field(dim, vec, name):
    v = np.asarray(vec, dtype=float)
    return ChartVectorField(
        dim, lambda pts: np.broadcast_to(v, np.atleast_2d(pts).shape).copy(),
        jacobian=lambda pts: np.zeros((np.atleast_2d(pts).shape[0], dim, dim)),
        name=name)


# ---------------------------------------------------------------------------
# Cartan prolongation
# ---------------------------------------------------------------------------

def cartan_prolongation(c: ContactModel) -> EngelStructure:
    """Engel structure on V x S^1 with D = <d/dtheta, cos(th) l1 + sin(th) l2>.

    E is the pullback of the contact planes together with the fiber
    direction; the Cauchy characteristic is the fiber tangent, every fiber is
    a closed orbit, and the plane field repeats after theta -> theta + pi.
    """
    if c.legendrian_frame is None:
        raise NotContact("Cartan prolongation needs a Legendrian frame")
    c.validate()
    l1, l2 = c.legendrian_frame
    base = c.model
    frame = [
        _const_field(4, [0, 0, 0, 1], "T"),
        _lift_field(l1.chart_field(base)),
        _lift_field(l2.chart_field(base)),
        _lift_field(c.transverse.chart_field(base)),
    ]
    box = np.vstack([base.box, [0.0, TWO_PI]])
    periodic = dict(base.periodic)
    periodic[3] = TWO_PI
    model = ChartModel(4, box, frame, periodic=periodic,
                       orbit_periods={3: np.pi}, name=f"cartan({base.name})")

    cos_t = lambda pts: np.cos(np.atleast_2d(pts)[:, 3])
    sin_t = lambda pts: np.sin(np.atleast_2d(pts)[:, 3])
    D = [Section((1, 0, 0, 0), "W"), Section((0, cos_t, sin_t, 0), "C")]
    E = [Section((1, 0, 0, 0), "W"), Section((0, 1, 0, 0), "l1"),
         Section((0, 0, 1, 0), "l2")]
    return EngelStructure(
        model=model, D_span=D, E_span=E,
        W_section=Section((1, 0, 0, 0), "W"),
        transverse_section=Section((0, 0, 0, 1), "R"),
        provenance="cartan_prolongation",
        emw_frame=(Section((0, 1, 0, 0), "l1"), Section((0, 0, 1, 0), "l2")),
        aux={"contact": c})


# ---------------------------------------------------------------------------
# Lorentz prolongation
# ---------------------------------------------------------------------------

def lorentz_prolongation(ext: LorentzExtension) -> EngelStructure:
    """Engel structure on the null-circle bundle of a Lorentzian extension.

    Product kind: W = X + Theta, D = <W, Z>, E = <W, Z, Y>.
    Magnetic kind: D = <Xt + Zt, Theta>, E adds Yt, and the Cauchy
    characteristic is Xt + Zt - (1 + kappa) Theta.
    """
    ext.check_signature()
    model = ext.model
    if ext.kind == "product":
        D = [Section((1, 0, 0, 1), "W"), Section((0, 0, 1, 0), "Z")]
        E = D + [Section((0, 1, 0, 0), "Y")]
        W = Section((1, 0, 0, 1), "W")
        emw = (Section((0, 1, 0, 0), "Y"), Section((0, 0, 1, 0), "Z"))
        tau = Section((1, 0, 0, 0), "X")
    elif ext.kind == "magnetic":
        if isinstance(model, LieModel):
            theta_coeff = -(1.0 + float(ext.kappa))
        else:
            theta_coeff = lambda pts: -(1.0 + ext.kappa_at(np.atleast_2d(pts)))
        D = [Section((1, 0, 1, 0), "L"), Section((0, 0, 0, 1), "Theta")]
        E = [Section((1, 0, 1, 0), "L"), Section((0, 1, 0, 0), "Yt"),
             Section((0, 0, 0, 1), "Theta")]
        W = Section((1, 0, 1, theta_coeff), "W")
        emw = (Section((0, 0, 0, 1), "Theta"), Section((0, 1, 0, 0), "Yt"))
        tau = Section((1, 0, 0, 0), "Xt")
    else:
        raise SignatureError(f"unknown extension kind {ext.kind!r}")
    return EngelStructure(
        model=model, D_span=D, E_span=E, W_section=W,
        transverse_section=tau,
        provenance=f"lorentz_prolongation[{ext.kind}]",
        emw_frame=emw,
        aux={"extension": ext})


# ---------------------------------------------------------------------------
# pre-quantum prolongation
# ---------------------------------------------------------------------------

def _fd_dbeta(beta: Callable, pts: np.ndarray, h: float) -> np.ndarray:
    """d(beta) as the antisymmetric matrix (d beta)_{ij} = di bj - dj bi."""
    pts = np.atleast_2d(pts)
    n = pts.shape[0]
    grad = np.empty((n, 3, 3))  # grad[:, i, j] = d_i beta_j
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        grad[:, i, :] = (np.atleast_2d(beta(pts + e)) - np.atleast_2d(beta(pts - e))) / (2 * h)
    return grad - np.swapaxes(grad, 1, 2)


def prequantum_prolongation(c: ContactModel, w_bar: Section,
                            vol: Callable, beta: Callable,
                            tol: float = 1e-6,
                            emw: Optional[Sequence[Section]] = None,
                            n_check: int = 50) -> EngelStructure:
    """Engel structure on V x S^1 from a connection with curvature i_W vol.

    The base chart frame must be the coordinate frame: ``beta`` returns the
     1-form coefficients (beta_1, beta_2, beta_3) and ``vol`` the scalar
    density rho in vol = rho dq1^dq2^dq3.  E is the horizontal distribution
    ker(dtheta + beta), D its intersection with the lifted contact planes,
    and W the horizontal lift of the Legendrian field w_bar.  The caller
    asserts that w_bar preserves vol; the curvature relation
    d(beta) = i_{w_bar} vol is checked at samples.
    """
    base = c.model
    pts = sample_box(base, n_check)
    db = _fd_dbeta(beta, pts, DEFAULTS.h)
    wv = np.atleast_2d(w_bar.chart_field(base)(pts))
    rho = np.asarray(vol(pts), dtype=float)
    iv = np.zeros_like(db)
    iv[:, 0, 1] = rho * wv[:, 2]
    iv[:, 1, 0] = -iv[:, 0, 1]
    iv[:, 0, 2] = -rho * wv[:, 1]
    iv[:, 2, 0] = -iv[:, 0, 2]
    iv[:, 1, 2] = rho * wv[:, 0]
    iv[:, 2, 1] = -iv[:, 1, 2]
    defect = float(np.abs(db - iv).max())
    if defect > tol:
        raise CurvatureMismatch(
            f"d(beta) differs from i_w vol by {defect:.3e} (tol {tol:g})")

    def h_field(i):
        def comp(pts4):
            pts4 = np.atleast_2d(pts4)
            out = np.zeros((pts4.shape[0], 4))
            out[:, i] = 1.0
            out[:, 3] = -np.atleast_2d(beta(pts4[:, :3]))[:, i]
            return out
        return ChartVectorField(4, comp, name=f"h{i}")

    frame = [h_field(0), h_field(1), h_field(2), _const_field(4, [0, 0, 0, 1], "Theta")]
    box = np.vstack([base.box, [0.0, TWO_PI]])
    periodic = dict(base.periodic)
    periodic[3] = TWO_PI
    model = ChartModel(4, box, frame, periodic=periodic,
                       name=f"prequantum({base.name})")

    def lift_section(s: Section, name) -> Section:
        # base-frame coefficients must be chart components for the h-frame
        f = s.chart_field(base)
        coeffs = tuple(
            (lambda pts4, j=j: np.atleast_2d(f(np.atleast_2d(pts4)[:, :3]))[:, j])
            for j in range(3)) + (0,)
        return Section(coeffs, name)

    D = [lift_section(c.xi[0], "h-xi1"), lift_section(c.xi[1], "h-xi2")]
    E = [Section((1, 0, 0, 0), "h1"), Section((0, 1, 0, 0), "h2"),
         Section((0, 0, 1, 0), "h3")]
    W = lift_section(w_bar, "hW")
    if emw is None:
        emw = (D[1] if _sections_parallel(base, c.xi[0], w_bar) else D[0],
               lift_section(c.transverse, "h-transverse"))
    return EngelStructure(
        model=model, D_span=D, E_span=E, W_section=W,
        transverse_section=Section((0, 0, 0, 1), "Theta"),
        provenance="prequantum_prolongation",
        emw_frame=emw,
        aux={"contact": c, "beta": beta, "vol": vol})


def _sections_parallel(model, a: Section, b: Section) -> bool:
    p = model.box.mean(axis=1)
    va = a.chart_field(model)(p)
    vb = b.chart_field(model)(p)
    cross = np.linalg.norm(va) * np.linalg.norm(vb) - abs(float(va @ vb))
    return cross < 1e-10


def prequantum_local() -> EngelStructure:
    """The built-in local model: V = (x, z, w), xi = ker(dz - w dx),
    w_bar = d/dw, vol = dx^dz^dw, beta = -z dx.

    After the gauge normalization this is the standard Engel structure in the
    coordinates (x, theta, z, w); the M-chart here is ordered (x, z, w, theta).
    """
    def const3(vec):
        v = np.asarray(vec, dtype=float)
        return lambda pts: np.broadcast_to(v, np.atleast_2d(pts).shape).copy()

    def xi2_comp(pts):
        pts = np.atleast_2d(pts)
        out = np.zeros_like(pts)
        out[:, 0] = 1.0
        out[:, 1] = pts[:, 2]   # d/dx + w d/dz, coords (x, z, w)
        return out

    zero_jac = lambda pts: np.zeros((np.atleast_2d(pts).shape[0], 3, 3))

    def xi2_jac(pts):
        J = np.zeros((np.atleast_2d(pts).shape[0], 3, 3))
        J[:, 1, 2] = 1.0
        return J

    E1 = ChartVectorField(3, const3([1, 0, 0]), jacobian=zero_jac, name="dx")
    E2 = ChartVectorField(3, const3([0, 1, 0]), jacobian=zero_jac, name="dz")
    E3 = ChartVectorField(3, const3([0, 0, 1]), jacobian=zero_jac, name="dw")
    base = ChartModel(3, [[-2, 2]] * 3, [E1, E2, E3], name="prequantum-base")
    xi = (Section((0, 0, 1), "dw"),
          Section((lambda pts: np.ones(np.atleast_2d(pts).shape[0]),
                   lambda pts: np.atleast_2d(pts)[:, 2], 0), "X0"))
    c = ContactModel(model=base, xi=xi, transverse=Section((0, 1, 0), "dz"))
    c.validate()
    beta = lambda pts: np.stack(
        [-np.atleast_2d(pts)[:, 1], np.zeros(np.atleast_2d(pts).shape[0]),
         np.zeros(np.atleast_2d(pts).shape[0])], axis=-1)
    vol = lambda pts: np.ones(np.atleast_2d(pts).shape[0])
    s = prequantum_prolongation(c, w_bar=Section((0, 0, 1), "dw"),
                                vol=vol, beta=beta)
    s.provenance = "prequantum_local"
    return s


# ---------------------------------------------------------------------------
# propellor constructions
# ---------------------------------------------------------------------------

def _logm2(m: np.ndarray) -> np.ndarray:
    """Real logarithm of a 2x2 unimodular matrix with positive eigenvalues
    (identity, unipotent, or hyperbolic with trace > 2)."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1]
    if np.allclose(m, np.eye(2), atol=1e-12):
        return np.zeros((2, 2))
    if abs(tr - 2.0) < 1e-12:
        n = m - np.eye(2)
        if np.abs(n @ n).max() > 1e-10:
            raise ConfigError("trace-2 monodromy is not unipotent")
        return n
    if tr > 2.0:
        evals, vecs = np.linalg.eig(m)
        if np.iscomplexobj(evals) and np.abs(evals.imag).max() > 1e-12:
            raise ConfigError("monodromy eigenvalues are not real")
        evals = evals.real
        vecs = vecs.real
        return (vecs @ np.diag(np.log(evals)) @ np.linalg.inv(vecs)).real
    raise ConfigError("propellor supports identity, unipotent, or trace > 2 monodromy")


def _expm2_family(L: np.ndarray, t: np.ndarray) -> np.ndarray:
    """exp(t L) for a trace-free 2x2 generator, batched over t.

    L^2 = disc * I with disc = -det(L), so the exponential is a cosh/cos
    pencil in (I, L)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    disc = -float(np.linalg.det(L))
    if disc > 1e-14:
        w = np.sqrt(disc)
        c, s = np.cosh(w * t), np.sinh(w * t) / w
    elif disc < -1e-14:
        w = np.sqrt(-disc)
        c, s = np.cos(w * t), np.sin(w * t) / w
    else:
        c, s = np.ones_like(t), t
    return c[:, None, None] * np.eye(2) + s[:, None, None] * L


def propellor_line_path(monodromy: np.ndarray, turns: int = 1) -> Callable:
    """Equivariant rotating line path (a, b)(t) = phi^t . (cos, sin)(2 pi turns t).

    Equivariant as a vector field for every integer ``turns``; rotation stays
    monotone as long as 2 pi turns exceeds the angular rate of log(monodromy).
    """
    L = _logm2(monodromy)

    def path(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        u = np.stack([np.cos(2 * np.pi * turns * t),
                      np.sin(2 * np.pi * turns * t)], axis=-1)
        return np.einsum("nij,nj->ni", _expm2_family(L, t), u)

    return path


def propellor_structure(monodromy: np.ndarray,
                        line_path: Optional[Callable] = None,
                        turns: int = 1,
                        n_check: int = 64) -> tuple[ContactModel, EngelStructure]:
    """Mapping-torus contact model with a rotating fiberwise line field and
    its pre-quantum prolongation.

    The suspension field d/dt is the Legendrian, volume-preserving field fed
    to the pre-quantization (its dual closed 2-form is the fiber area
    dx^dy).  The E/W working frame is the monodromy-equivariant frame
    phi^t(e1), phi^t(e2), which is the frame in which the mapping-torus
    holonomy is visible on a single chart.
    """
    m = np.asarray(monodromy, dtype=float)
    if abs(np.linalg.det(m) - 1.0) > 1e-12:
        raise ConfigError("monodromy must be unimodular")
    L = _logm2(m)
    path = line_path if line_path is not None else propellor_line_path(m, turns=turns)

    ts = np.linspace(0.0, 1.0, n_check)
    ab0 = np.atleast_2d(path(ts))
    ab1 = np.atleast_2d(path(ts + 1.0))
    if np.abs(ab1 - ab0 @ m.T).max() > 1e-8:
        raise EquivarianceError("line path is not equivariant under the monodromy")
    dt = 1e-6
    abp = (np.atleast_2d(path(ts + dt)) - np.atleast_2d(path(ts - dt))) / (2 * dt)
    omega = ab0[:, 0] * abp[:, 1] - ab0[:, 1] * abp[:, 0]
    if np.abs(omega).min() < 1e-10 or np.sign(omega).min() != np.sign(omega).max():
        raise NotContact("line path angular velocity must keep a single sign")

    def const3(vec):
        v = np.asarray(vec, dtype=float)
        return lambda pts: np.broadcast_to(v, np.atleast_2d(pts).shape).copy()

    zero_jac3 = lambda pts: np.zeros((np.atleast_2d(pts).shape[0], 3, 3))
    E1 = ChartVectorField(3, const3([1, 0, 0]), jacobian=zero_jac3, name="dx")
    E2 = ChartVectorField(3, const3([0, 1, 0]), jacobian=zero_jac3, name="dy")
    E3 = ChartVectorField(3, const3([0, 0, 1]), jacobian=zero_jac3, name="dt")
    base = ChartModel(3, [[0, 1], [0, 1], [0, 1]], [E1, E2, E3],
                      periodic={0: 1.0, 1: 1.0}, name="propellor-base")

    a_of = lambda pts: np.atleast_2d(path(np.atleast_2d(pts)[:, 2]))[:, 0]
    b_of = lambda pts: np.atleast_2d(path(np.atleast_2d(pts)[:, 2]))[:, 1]
    xi = (Section((a_of, b_of, 0), "l"), Section((0, 0, 1), "dt"))

    contact = ContactModel(model=base, xi=xi,
                           transverse=Section(
                               ((lambda pts: -b_of(pts)), a_of, 0), "n"))
    contact.validate()

    beta = lambda pts: np.stack(
        [-np.atleast_2d(pts)[:, 1],
         np.zeros(np.atleast_2d(pts).shape[0]),
         np.zeros(np.atleast_2d(pts).shape[0])], axis=-1)
    vol = lambda pts: np.ones(np.atleast_2d(pts).shape[0])

    def col(j):
        def cj(pts):
            t = np.atleast_2d(pts)[:, 2]
            return _expm2_family(L, t)[:, :, j]
        return cj

    colP, colQ = col(0), col(1)
    P = Section(((lambda pts: colP(pts)[:, 0]), (lambda pts: colP(pts)[:, 1]), 0, 0), "hP")
    Q = Section(((lambda pts: colQ(pts)[:, 0]), (lambda pts: colQ(pts)[:, 1]), 0, 0), "hQ")

    s = prequantum_prolongation(contact, w_bar=Section((0, 0, 1), "dt"),
                                vol=vol, beta=beta, emw=(P, Q))
    s.provenance = "propellor"
    # the W-flow only moves t; everything entering the transport is
    # 1-periodic in t in the equivariant frame, so long orbits may wrap
    s.model.periodic[2] = 1.0
    s.aux.update({"monodromy": m, "log_monodromy": L, "line_path": path})
    return contact, s


def bi_engel_pair(monodromy: np.ndarray = ((2, 1), (1, 1)),
                  turns: int = 1) -> tuple[EngelStructure, EngelStructure]:
    """Two Engel structures sharing one even contact structure.

    The propellor even contact structure over a hyperbolic monodromy carries
    two invariant line fields in E/W (the equivariant eigen-directions); the
    diagonal planes <W, u + s> and <W, u - s> are both Engel for the same E,
    a bi-Engel pair of genuine-hyperbolic type.
    """
    m = np.asarray(monodromy, dtype=float)
    if m[0, 0] + m[1, 1] <= 2.0 + 1e-12:
        raise ConfigError("bi-Engel pair needs a hyperbolic monodromy")
    contact, s = propellor_structure(m, turns=turns)
    evals, vecs = np.linalg.eig(m)
    order = np.argsort(evals.real)[::-1]
    mu = float(evals.real[order[0]])
    vu = vecs.real[:, order[0]]
    vs = vecs.real[:, order[1]]
    lmu = np.log(mu)

    def eig_sec(vec, rate, name):
        def cx(pts):
            return np.exp(rate * np.atleast_2d(pts)[:, 2]) * vec[0]
        def cy(pts):
            return np.exp(rate * np.atleast_2d(pts)[:, 2]) * vec[1]
        return Section((cx, cy, 0, 0), name)

    U = eig_sec(vu, -lmu, "hU")
    S = eig_sec(vs, +lmu, "hS")

    def diag_sec(sign):
        def cx(pts):
            return U.coeff_at(pts)[..., 0] + sign * S.coeff_at(pts)[..., 0]
        def cy(pts):
            return U.coeff_at(pts)[..., 1] + sign * S.coeff_at(pts)[..., 1]
        return Section((cx, cy, 0, 0), f"hU{'+' if sign > 0 else '-'}hS")

    W = Section((0, 0, 1, 0), "hW")
    pair = []
    for sign in (+1, -1):
        st = EngelStructure(
            model=s.model,
            D_span=[W, diag_sec(sign)],
            E_span=list(s.E_span),
            W_section=W,
            transverse_section=s.transverse_section,
            provenance=f"bi_engel[{'+' if sign > 0 else '-'}]",
            emw_frame=(U, S),
            aux=dict(s.aux))
        pair.append(st)
    return pair[0], pair[1]


# ---------------------------------------------------------------------------
# suspension
# ---------------------------------------------------------------------------

@dataclass
class SuspensionData:
    """Input data for the suspension construction.

    ``phi`` is a contactomorphism of the contact model, with jacobian
    ``dphi`` and inverse ``phi_inv``; ``rho(t, v)`` is the twist profile and
    ``K`` the twist count, with rho(0, v) = 0, rho(1, v) = K pi - d(v), and
    d rho / dt > 0 for the measured twisting angle d of phi.
    """

    contact: ContactModel
    phi: Callable
    dphi: Callable
    phi_inv: Callable
    rho: Callable
    K: int

    def twisting_angle(self, pts: np.ndarray) -> np.ndarray:
        """Angle of (phi_* l1) from l1 in the Legendrian-frame metric, in [0, pi)."""
        base = self.contact.model
        l1, l2 = self.contact.legendrian_frame
        pts = np.atleast_2d(pts)
        pre = np.atleast_2d(self.phi_inv(pts))
        v = np.atleast_2d(l1.chart_field(base)(pre))
        J = np.asarray(self.dphi(pre), dtype=float)
        pushed = np.einsum("nij,nj->ni", J, v)
        basis = np.stack([np.atleast_2d(l1.chart_field(base)(pts)),
                          np.atleast_2d(l2.chart_field(base)(pts)),
                          np.atleast_2d(self.contact.transverse.chart_field(base)(pts))],
                         axis=2)
        coef = np.einsum("nkd,nd->nk", np.linalg.pinv(basis), pushed)
        return np.mod(np.arctan2(coef[:, 1], coef[:, 0]), np.pi)


def suspension(sd: SuspensionData, n_check: int = 40,
               tol: float = 1e-6) -> EngelStructure:
    """Mapping-torus Engel structure: D rotates by the twist profile rho.

    The chart covers the fundamental domain t in [0, 1]; deck-gluing data is
    the caller's concern and the profile invariants are checked at samples.
    """
    c = sd.contact
    if c.legendrian_frame is None:
        raise NotContact("suspension needs a Legendrian frame")
    c.validate()
    base = c.model
    pts = sample_box(base, n_check)
    r0 = np.atleast_1d(sd.rho(np.zeros(pts.shape[0]), pts))
    if np.abs(r0).max() > tol:
        raise TwistMonotonicityError("rho(0, v) must vanish")
    r1 = np.atleast_1d(sd.rho(np.ones(pts.shape[0]), pts))
    d = sd.twisting_angle(pts)
    target = sd.K * np.pi - d
    # compare as line angles (the twisted plane repeats after a half turn)
    mismatch = np.abs(np.mod(r1 - target + np.pi / 2, np.pi) - np.pi / 2)
    if mismatch.max() > 1e-3:
        raise TwistMonotonicityError(
            f"rho(1, v) differs from K pi - d(v) by up to {mismatch.max():.3e}")
    eps = 1e-5
    for tval in np.linspace(0.0, 1.0, 11):
        tv = np.full(pts.shape[0], tval)
        drho = (np.atleast_1d(sd.rho(tv + eps, pts))
                - np.atleast_1d(sd.rho(tv - eps, pts))) / (2 * eps)
        if drho.min() <= 0:
            raise TwistMonotonicityError("d rho / dt must be positive")

    l1, l2 = c.legendrian_frame
    frame = [
        _const_field(4, [0, 0, 0, 1], "T"),
        _lift_field(l1.chart_field(base)),
        _lift_field(l2.chart_field(base)),
        _lift_field(c.transverse.chart_field(base)),
    ]
    box = np.vstack([base.box, [0.0, 1.0]])
    model = ChartModel(4, box, frame, periodic=dict(base.periodic),
                       name=f"suspension({base.name})")

    def cos_r(pts4):
        pts4 = np.atleast_2d(pts4)
        return np.cos(np.atleast_1d(sd.rho(pts4[:, 3], pts4[:, :3])))

    def sin_r(pts4):
        pts4 = np.atleast_2d(pts4)
        return np.sin(np.atleast_1d(sd.rho(pts4[:, 3], pts4[:, :3])))

    D = [Section((1, 0, 0, 0), "W"), Section((0, cos_r, sin_r, 0), "C")]
    E = [Section((1, 0, 0, 0), "W"), Section((0, 1, 0, 0), "l1"),
         Section((0, 0, 1, 0), "l2")]
    return EngelStructure(
        model=model, D_span=D, E_span=E,
        W_section=Section((1, 0, 0, 0), "W"),
        transverse_section=Section((0, 0, 0, 1), "R"),
        provenance="suspension",
        emw_frame=(Section((0, 1, 0, 0), "l1"), Section((0, 0, 1, 0), "l2")),
        aux={"suspension": sd})


def suspension_identity(c: ContactModel = None, K: int = 1) -> EngelStructure:
    """Suspension by the identity with rho = K pi t (reproduces Cartan)."""
    c = standard_contact_r3() if c is None else c
    ident = lambda pts: np.atleast_2d(pts).copy()
    dident = lambda pts: np.broadcast_to(np.eye(3), (np.atleast_2d(pts).shape[0], 3, 3)).copy()
    sd = SuspensionData(contact=c, phi=ident, dphi=dident, phi_inv=ident,
                        rho=lambda t, v: K * np.pi * np.atleast_1d(t), K=K)
    s = suspension(sd)
    s.provenance = "suspension_identity"
    return s


def suspension_geodesic(kappa: float = -1.0) -> EngelStructure:
    """Suspension of the unit tangent bundle by the geodesic flow.

    The twisted plane is <d/dt, (phi_{-t})_* Z>; on a constant-curvature
    chart the pushforward solves V' = [X, V], giving the closed form
    a(t) Y + b(t) Z with a' = -b, b' = kappa a, a(0) = 0, b(0) = 1.  The
    chart covers one fundamental domain t in [0, 2 pi] of the mapping torus
    of the time-2 pi map; it is isomorphic to the product Lorentz extension.
    """
    ut = unit_tangent_frames(constant_curvature_surface(kappa))
    X3, Y3, Z3 = ut.model.frame
    frame = [
        _const_field(4, [0, 0, 0, 1], "T"),
        _lift_field(X3),
        _lift_field(Y3),
        _lift_field(Z3),
    ]
    box = np.vstack([ut.model.box, [0.0, TWO_PI]])
    model = ChartModel(4, box, frame, periodic=dict(ut.model.periodic),
                       name=f"suspension-geodesic(k={kappa:g})")

    k = float(kappa)

    def ab(t):
        t = np.atleast_1d(t)
        if k > 0:
            r = np.sqrt(k)
            return -np.sin(r * t) / r, np.cos(r * t)
        if k < 0:
            r = np.sqrt(-k)
            return -np.sinh(r * t) / r, np.cosh(r * t)
        return -t, np.ones_like(t)

    def ab_y(t):
        # flow-pushforward of Y: V' = [X, V] with V(0) = Y
        t = np.atleast_1d(t)
        if k > 0:
            r = np.sqrt(k)
            return np.cos(r * t), r * np.sin(r * t)
        if k < 0:
            r = np.sqrt(-k)
            return np.cosh(r * t), -r * np.sinh(r * t)
        return np.ones_like(t), np.zeros_like(t)

    a_c = lambda pts: ab(np.atleast_2d(pts)[:, 3])[0]
    b_c = lambda pts: ab(np.atleast_2d(pts)[:, 3])[1]
    ay_c = lambda pts: ab_y(np.atleast_2d(pts)[:, 3])[0]
    by_c = lambda pts: ab_y(np.atleast_2d(pts)[:, 3])[1]
    D = [Section((1, 0, 0, 0), "T"), Section((0, 0, a_c, b_c), "C")]
    E = [Section((1, 0, 0, 0), "T"), Section((0, 0, 1, 0), "Y"),
         Section((0, 0, 0, 1), "Z")]
    # the E/W frame must be the flow-equivariant one: on a mapping-torus
    # chart the deck holonomy is only visible in pushed-forward sections
    return EngelStructure(
        model=model, D_span=D, E_span=E,
        W_section=Section((1, 0, 0, 0), "T"),
        transverse_section=Section((0, 1, 0, 0), "X"),
        provenance="suspension_geodesic",
        emw_frame=(Section((0, 0, ay_c, by_c), "Ys"), Section((0, 0, a_c, b_c), "Zs")),
        aux={"ut": ut, "kappa": k})
