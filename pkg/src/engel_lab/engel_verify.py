"""Engel-condition verification, Cauchy characteristic extraction, and the
two Darboux normal-form structures.

A candidate structure passes when at every sampled point

    rank D = 2,   rank [D, D] = 3,   rank [E, E] = 4,

the first two being the defining non-integrability conditions and the last
forcing the even contact structure to be maximally non-integrable.  The
Cauchy characteristic is recovered numerically as the kernel of the skew
bracket pairing on E read against a declared transverse direction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULTS
from .errors import DegenerateKernel, DimensionMismatch
from .frame_algebra import (
    ChartModel,
    ChartVectorField,
    FrameModel,
    LieModel,
    Section,
    bracket_chart,
    rank_with_margin,
)

_PRIMES = (2, 3, 5, 7, 11, 13)


def halton_points(n: int, dim: int, skip: int = 100) -> np.ndarray:
    """Deterministic Halton sequence in [0, 1)^dim."""
    if dim > len(_PRIMES):
        raise DimensionMismatch("halton sampler supports dim <= 6")
    out = np.empty((n, dim))
    for j in range(dim):
        b = _PRIMES[j]
        idx = np.arange(skip + 1, skip + n + 1, dtype=np.int64)
        col = np.zeros(n)
        f = 1.0
        i = idx.copy()
        while np.any(i > 0):
            f /= b
            col += f * (i % b)
            i //= b
        out[:, j] = col
    return out


def sample_box(model: ChartModel, n: int, skip: int = 100) -> np.ndarray:
    u = halton_points(n, model.dim, skip=skip)
    lo, hi = model.box[:, 0], model.box[:, 1]
    return lo + u * (hi - lo)


@dataclass
class EngelStructure:
    """A frame model with designated spanning data for W in D in E in TM.

    ``emw_frame`` is the construction's preferred complement of W inside E,
    used as the working frame of E/W by the dynamics module.  ``aux`` carries
    construction-specific payloads (curvature functions, metrics, deck data).
    """

    model: FrameModel
    D_span: Sequence[Section]
    E_span: Sequence[Section]
    W_section: Section
    transverse_section: Section
    provenance: str
    emw_frame: Optional[Sequence[Section]] = None
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.D_span) != 2 or len(self.E_span) != 3:
            raise DimensionMismatch("need 2 D sections and 3 E sections")

    def section_values(self, sections, pts):
        """Stack section values at pts -> (n, k, dim)."""
        if isinstance(self.model, LieModel):
            rows = np.stack([s.constant_coeffs() for s in sections])
            return np.broadcast_to(rows, (len(np.atleast_2d(pts)),) + rows.shape)
        pts = np.atleast_2d(pts)
        return np.stack(
            [np.atleast_2d(s.chart_field(self.model)(pts)) for s in sections],
            axis=1)

    def bracket(self, a: Section, b: Section, pts=None) -> np.ndarray:
        if isinstance(self.model, LieModel):
            val = self.model.bracket(a.constant_coeffs(), b.constant_coeffs())
            return np.broadcast_to(val, (len(np.atleast_2d(pts)), self.model.dim))
        return np.atleast_2d(
            bracket_chart(a.chart_field(self.model), b.chart_field(self.model),
                          np.atleast_2d(pts)))


@dataclass
class VerificationReport:
    provenance: str
    tolerances: dict
    points: np.ndarray
    rank_D: np.ndarray
    rank_E: np.ndarray
    rank_EE: np.ndarray
    cauchy_angle_error: np.ndarray
    marginal: np.ndarray
    passed: bool
    summary: dict

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "provenance": self.provenance,
            "tolerances": self.tolerances,
            "passed": bool(self.passed),
            "summary": self.summary,
            "records": [
                {
                    "point": [float(x) for x in self.points[i]],
                    "rank_D": int(self.rank_D[i]),
                    "rank_E": int(self.rank_E[i]),
                    "rank_EE": int(self.rank_EE[i]),
                    "cauchy_angle_error": float(self.cauchy_angle_error[i]),
                    "marginal": bool(self.marginal[i]),
                }
                for i in range(len(self.points))
            ],
        }


def line_angle(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Unsigned angle between lines spanned by u and v (batched on axis 0)."""
    u = np.atleast_2d(u)
    v = np.atleast_2d(v)
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    c = np.abs(np.einsum("ni,ni->n", u, v)) / np.where(nu * nv == 0, 1.0, nu * nv)
    return np.arccos(np.clip(c, -1.0, 1.0))


def _pairing_matrices(s: EngelStructure, pts: np.ndarray):
    """Skew matrices B_ij = transverse component of [e_i, e_j] on E, batched.

    Returns (B, basis) with B of shape (n, 3, 3) and basis the stacked
    (e_1, e_2, e_3, transverse) values of shape (n, dim, 4).
    """
    pts = np.atleast_2d(pts)
    n = pts.shape[0]
    Ev = s.section_values(s.E_span, pts)                    # (n, 3, dim)
    tv = s.section_values([s.transverse_section], pts)[:, 0]  # (n, dim)
    basis = np.concatenate([Ev, tv[:, None, :]], axis=1)     # (n, 4, dim)
    basis_T = np.swapaxes(basis, 1, 2)                       # (n, dim, 4)
    pinv = np.linalg.pinv(basis_T)
    B = np.zeros((n, 3, 3))
    for i in range(3):
        for j in range(i + 1, 3):
            br = s.bracket(s.E_span[i], s.E_span[j], pts)    # (n, dim)
            coef = np.einsum("nkd,nd->nk", pinv, br)
            B[:, i, j] = coef[:, 3]
            B[:, j, i] = -coef[:, 3]
    return B, Ev


def cauchy_characteristic(s: EngelStructure, p: np.ndarray,
                          tol: float = None) -> np.ndarray:
    """Unit vector spanning the kernel of the bracket pairing on E at ``p``.

    Accepts a single point or a batch; the sign is aligned with the
    structure's declared W section.  Raises :class:`DegenerateKernel` when
    the pairing has rank < 2 (E is not even-contact there).
    """
    tol = DEFAULTS.rank_tol if tol is None else float(tol)
    if isinstance(s.model, LieModel):
        p = np.zeros(s.model.dim) if p is None else np.asarray(p, dtype=float)
    single = np.asarray(p).ndim == 1
    pts = np.atleast_2d(np.asarray(p, dtype=float))
    B, Ev = _pairing_matrices(s, pts)
    _, sv, vt = np.linalg.svd(B)
    if np.any(sv[:, 1] < tol):
        raise DegenerateKernel("bracket pairing on E has rank < 2")
    ker = vt[:, -1, :]                                       # (n, 3)
    wvec = np.einsum("nk,nkd->nd", ker, Ev)
    wvec /= np.linalg.norm(wvec, axis=-1, keepdims=True)
    wdecl = s.section_values([s.W_section], pts)[:, 0]
    sign = np.sign(np.einsum("nd,nd->n", wvec, wdecl))
    sign[sign == 0] = 1.0
    wvec *= sign[:, None]
    return wvec[0] if single else wvec


def verify_engel(s: EngelStructure, n_samples: int = 1000,
                 tol: float = None, skip: int = 100) -> VerificationReport:
    """Check ranks (2, 3, 4) at quasi-random sample points of the model.

    For a Lie model the data is point-independent and a single record is
    emitted.  Marginal rank decisions are flagged, never silently resolved.
    """
    tol = DEFAULTS.rank_tol if tol is None else float(tol)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if isinstance(s.model, LieModel):
        pts = np.zeros((1, s.model.dim))
    else:
        pts = sample_box(s.model, n_samples, skip=skip)
    n = pts.shape[0]

    Dv = s.section_values(s.D_span, pts)                     # (n, 2, dim)
    rank_D, marg_D = rank_with_margin(Dv, tol)

    brDD = s.bracket(s.D_span[0], s.D_span[1], pts)          # (n, dim)
    Ederived = np.concatenate([Dv, brDD[:, None, :]], axis=1)
    rank_E, marg_E = rank_with_margin(Ederived, tol)

    Ev = s.section_values(s.E_span, pts)
    rows = [Ev]
    for i in range(3):
        for j in range(i + 1, 3):
            rows.append(s.bracket(s.E_span[i], s.E_span[j], pts)[:, None, :])
    EE = np.concatenate(rows, axis=1)
    rank_EE, marg_EE = rank_with_margin(EE, tol)

    angle = np.full(n, np.nan)
    try:
        B, EvB = _pairing_matrices(s, pts)
        u, sv, vt = np.linalg.svd(B)
        ok = sv[:, 1] >= tol
        ker = vt[:, -1, :]
        wvec = np.einsum("nk,nkd->nd", ker, EvB)
        wdecl = s.section_values([s.W_section], pts)[:, 0]
        ang = line_angle(wvec, wdecl)
        angle[ok] = np.atleast_1d(ang)[ok]
    except (np.linalg.LinAlgError, ValueError):
        pass   # degenerate declared data; the rank records carry the failure

    marginal = marg_D | marg_E | marg_EE
    passed = bool(np.all(rank_D == 2) and np.all(rank_E == 3)
                  and np.all(rank_EE == 4))
    summary = {
        "all_rank_D_2": bool(np.all(rank_D == 2)),
        "all_rank_E_3": bool(np.all(rank_E == 3)),
        "all_rank_EE_4": bool(np.all(rank_EE == 4)),
        "max_cauchy_angle_error": float(np.nanmax(angle)) if np.any(np.isfinite(angle)) else None,
        "n_marginal": int(marginal.sum()),
        "n_samples": int(n),
    }
    return VerificationReport(
        provenance=s.provenance,
        tolerances={"rank_tol": tol, "fd_step": DEFAULTS.h},
        points=pts,
        rank_D=rank_D,
        rank_E=rank_E,
        rank_EE=rank_EE,
        cauchy_angle_error=angle,
        marginal=marginal,
        passed=passed,
        summary=summary,
    )


# ---------------------------------------------------------------------------
# Darboux models
# ---------------------------------------------------------------------------

def _const(vec):
    v = np.asarray(vec, dtype=float)
    return lambda pts: np.broadcast_to(v, np.atleast_2d(pts).shape).copy()


def darboux_standard() -> EngelStructure:
    """The standard Engel structure on the chart box [-2, 2]^4.

    Frame (X, Y, Z, W) with X = d/dx + z d/dy + w d/dz; D is cut out by the
    pair of 1-forms dy - z dx and dz - w dx, E by dy - z dx alone, and the
    Cauchy characteristic is d/dw.
    """
    def X_comp(pts):
        pts = np.atleast_2d(pts)
        out = np.zeros_like(pts)
        out[:, 0] = 1.0
        out[:, 1] = pts[:, 2]
        out[:, 2] = pts[:, 3]
        return out

    def X_jac(pts):
        pts = np.atleast_2d(pts)
        J = np.zeros((pts.shape[0], 4, 4))
        J[:, 1, 2] = 1.0
        J[:, 2, 3] = 1.0
        return J

    zero_jac = lambda pts: np.zeros((np.atleast_2d(pts).shape[0], 4, 4))
    X = ChartVectorField(4, X_comp, jacobian=X_jac, name="X")
    Y = ChartVectorField(4, _const([0, 1, 0, 0]), jacobian=zero_jac, name="Y")
    Z = ChartVectorField(4, _const([0, 0, 1, 0]), jacobian=zero_jac, name="Z")
    W = ChartVectorField(4, _const([0, 0, 0, 1]), jacobian=zero_jac, name="W")
    model = ChartModel(4, [[-2, 2]] * 4, [X, Y, Z, W], name="darboux-standard")

    D = [Section((0, 0, 0, 1), "W"), Section((1, 0, 0, 0), "X")]
    E = D + [Section((0, 0, 1, 0), "Z")]
    # flow-invariant E/W frame (d/dx + z d/dy, d/dz): developing angle = arctan w
    e1 = Section((1, 0, lambda pts: -np.atleast_2d(pts)[:, 3], 0), "X-wZ")
    e2 = Section((0, 0, 1, 0), "Z")
    return EngelStructure(
        model=model,
        D_span=D,
        E_span=E,
        W_section=Section((0, 0, 0, 1), "W"),
        transverse_section=Section((0, 1, 0, 0), "Y"),
        provenance="darboux_standard",
        emw_frame=(e1, e2),
        aux={"dW_angle_line": "w"},
    )


def darboux_long() -> EngelStructure:
    """The long Engel-Darboux structure on [-2, 2]^3 x S^1.

    D is cut out by dy - z dx and cos(th) dz - sin(th) dx; its restriction to
    th in (-pi/2, pi/2) is isomorphic to the standard structure via w = tan th.
    The plane field repeats after th -> th + pi, so orbits close at pi.
    """
    def Xbar_comp(pts):
        pts = np.atleast_2d(pts)
        out = np.zeros_like(pts)
        out[:, 0] = 1.0
        out[:, 1] = pts[:, 2]
        return out

    def Xbar_jac(pts):
        pts = np.atleast_2d(pts)
        J = np.zeros((pts.shape[0], 4, 4))
        J[:, 1, 2] = 1.0
        return J

    zero_jac = lambda pts: np.zeros((np.atleast_2d(pts).shape[0], 4, 4))
    Xbar = ChartVectorField(4, Xbar_comp, jacobian=Xbar_jac, name="Xbar")
    Y = ChartVectorField(4, _const([0, 1, 0, 0]), jacobian=zero_jac, name="Y")
    Z = ChartVectorField(4, _const([0, 0, 1, 0]), jacobian=zero_jac, name="Z")
    T = ChartVectorField(4, _const([0, 0, 0, 1]), jacobian=zero_jac, name="T")
    model = ChartModel(
        4, [[-2, 2], [-2, 2], [-2, 2], [0.0, 2 * np.pi]], [Xbar, Y, Z, T],
        periodic={3: 2 * np.pi}, orbit_periods={3: np.pi}, name="darboux-long")

    cos_t = lambda pts: np.cos(np.atleast_2d(pts)[:, 3])
    sin_t = lambda pts: np.sin(np.atleast_2d(pts)[:, 3])
    C = Section((cos_t, 0, sin_t, 0), "C")
    D = [Section((0, 0, 0, 1), "T"), C]
    E = [Section((0, 0, 0, 1), "T"), Section((1, 0, 0, 0), "Xbar"),
         Section((0, 0, 1, 0), "Z")]
    return EngelStructure(
        model=model,
        D_span=D,
        E_span=E,
        W_section=Section((0, 0, 0, 1), "T"),
        transverse_section=Section((0, 1, 0, 0), "Y"),
        provenance="darboux_long",
        emw_frame=(Section((1, 0, 0, 0), "Xbar"), Section((0, 0, 1, 0), "Z")),
        aux={"dW_angle_line": "theta"},
    )
