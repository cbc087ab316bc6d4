"""Vector fields, frames, Lie brackets, and distribution ranks.

Every model in this package is parallelizable and comes in one of two kinds:

* a :class:`ChartModel` whose global frame consists of evaluable
  :class:`ChartVectorField` objects on a coordinate box, or
* a :class:`LieModel` given by exact structure constants on an abstract frame.

Distribution sections are frame-coefficient combinations (coefficients either
constants or functions of the chart point), which is all the constructions
here need: brackets of such sections reduce to frame brackets plus directional
derivatives of coefficients, and both are computable.

Points are numpy arrays; every evaluable accepts a single point ``(dim,)`` or
a batch ``(n, dim)`` and returns matching leading dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .config import DEFAULTS
from .errors import (
    DimensionMismatch,
    DomainViolation,
    EmptyInput,
    NonFiniteEvaluation,
)

Coefficient = Union[float, int, Callable[[np.ndarray], np.ndarray]]


def _as_batch(p: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    """Return ``(points of shape (n, dim), was_single)``."""
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        if p.shape[0] != dim:
            raise DimensionMismatch(f"point has length {p.shape[0]}, expected {dim}")
        return p[None, :], True
    if p.shape[-1] != dim:
        raise DimensionMismatch(f"points have width {p.shape[-1]}, expected {dim}")
    return p, False


class ChartVectorField:
    """An evaluable vector field on a coordinate chart.

    ``components`` maps points to chart components.  When ``jacobian`` is
    absent, brackets fall back to central finite differences with step ``h``.
    ``box`` is the optional chart domain, rows ``(lo, hi)`` per coordinate.
    """

    def __init__(self, dim, components, jacobian=None, box=None, name=""):
        self.dim = int(dim)
        self.components = components
        self.jacobian = jacobian
        self.box = None if box is None else np.asarray(box, dtype=float)
        self.name = name

    def __call__(self, p: np.ndarray) -> np.ndarray:
        pts, single = _as_batch(p, self.dim)
        out = np.asarray(self.components(pts), dtype=float)
        if out.shape != pts.shape:
            out = np.broadcast_to(out, pts.shape).copy()
        return out[0] if single else out

    def jac(self, p: np.ndarray, h: float = None) -> np.ndarray:
        pts, single = _as_batch(p, self.dim)
        if self.jacobian is not None:
            J = np.asarray(self.jacobian(pts), dtype=float)
            if J.shape != (pts.shape[0], self.dim, self.dim):
                J = np.broadcast_to(J, (pts.shape[0], self.dim, self.dim)).copy()
        else:
            J = fd_jacobian(self, pts, h if h is not None else DEFAULTS.h)
        return J[0] if single else J

    def check_domain(self, p: np.ndarray) -> None:
        if self.box is None:
            return
        pts, _ = _as_batch(p, self.dim)
        lo, hi = self.box[:, 0], self.box[:, 1]
        if np.any(pts < lo - 1e-12) or np.any(pts > hi + 1e-12):
            raise DomainViolation("point outside the declared chart box")

    def jacobian_defect(self, pts: np.ndarray, h: float = None) -> float:
        """Max deviation of the supplied jacobian from central differences.

        O(h^2) on smooth fields; a larger value indicates an inconsistent
        analytic jacobian.
        """
        if self.jacobian is None:
            return 0.0
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        h = DEFAULTS.h if h is None else h
        return float(np.abs(self.jac(pts) - fd_jacobian(self, pts, h)).max())

    def __repr__(self):
        return f"ChartVectorField({self.name or 'anonymous'}, dim={self.dim})"


def fd_jacobian(f, pts: np.ndarray, h: float) -> np.ndarray:
    """Central-difference jacobian, batched over points: (n, dim, dim)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n, d = pts.shape
    J = np.empty((n, d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        J[:, :, j] = (np.atleast_2d(f(pts + e)) - np.atleast_2d(f(pts - e))) / (2.0 * h)
    return J


def bracket_chart(a: ChartVectorField, b: ChartVectorField, p: np.ndarray,
                  h: float = None) -> np.ndarray:
    """Lie bracket [a, b] = Db.a - Da.b at ``p`` (single point or batch).

    Uses analytic jacobians when both fields carry them, otherwise central
    finite differences with step ``h``.
    """
    if a.dim != b.dim:
        raise DimensionMismatch("fields live on charts of different dimension")
    a.check_domain(p)
    b.check_domain(p)
    pts, single = _as_batch(p, a.dim)
    av = np.atleast_2d(a(pts))
    bv = np.atleast_2d(b(pts))
    Ja = a.jac(pts, h)
    Jb = b.jac(pts, h)
    out = np.einsum("nij,nj->ni", Jb, av) - np.einsum("nij,nj->ni", Ja, bv)
    if not np.all(np.isfinite(out)):
        raise NonFiniteEvaluation("bracket evaluation produced NaN or inf")
    return out[0] if single else out


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

@dataclass
class LieModel:
    """Exact structure constants: [e_i, e_j] = sum_k c[k, i, j] e_k."""

    names: Sequence[str]
    c: np.ndarray
    curvature_parameter: Optional[float] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = len(self.names)
        if self.c.shape != (n, n, n):
            raise DimensionMismatch("structure constants must be (n, n, n)")

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def kind(self) -> str:
        return "lie"

    def bracket(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.shape != (self.dim,) or v.shape != (self.dim,):
            raise DimensionMismatch("coefficient vectors must match the frame size")
        return np.einsum("kij,i,j->k", self.c, u, v)

    def antisymmetry_defect(self) -> float:
        return float(np.abs(self.c + np.swapaxes(self.c, 1, 2)).max())

    def jacobi_defect(self) -> float:
        """Max norm of sum_cyclic [e_i, [e_j, e_k]] over all index triples."""
        # [e_i, [e_j, e_k]] = c[m, j, k] c[l, i, m] e_l
        t = np.einsum("lim,mjk->lijk", self.c, self.c)
        cyc = t + np.transpose(t, (0, 2, 3, 1)) + np.transpose(t, (0, 3, 1, 2))
        return float(np.abs(cyc).max())

    def validate(self, tol: float = 1e-12) -> None:
        if self.antisymmetry_defect() > tol:
            raise DimensionMismatch("structure constants are not antisymmetric")
        if self.jacobi_defect() > tol:
            raise DimensionMismatch("structure constants violate the Jacobi identity")


def bracket_lie(m: LieModel, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Exact bracket of constant-coefficient sections of a Lie frame."""
    return m.bracket(u, v)


@dataclass
class ChartModel:
    """A chart box with a designated global frame.

    ``periodic`` maps a coordinate index to its period (used by samplers and
    wrapped distances).  ``orbit_periods`` declares periods after which the
    *structure* closes up along that coordinate, which may be shorter than the
    chart period (the projectivized fiber of the Cartan prolongation closes
    after pi while the angle chart runs to 2*pi).
    """

    dim: int
    box: np.ndarray
    frame: Sequence[ChartVectorField]
    periodic: dict = field(default_factory=dict)
    orbit_periods: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=float)
        if self.box.shape != (self.dim, 2):
            raise DimensionMismatch("box must be (dim, 2)")
        if len(self.frame) != self.dim:
            raise DimensionMismatch("frame must have dim fields")

    @property
    def kind(self) -> str:
        return "chart"

    def contains(self, p: np.ndarray, pad: float = 0.0) -> np.ndarray:
        pts, single = _as_batch(p, self.dim)
        lo, hi = self.box[:, 0] - pad, self.box[:, 1] + pad
        ok = np.ones(pts.shape[0], dtype=bool)
        for j in range(self.dim):
            if j in self.periodic:
                continue
            ok &= (pts[:, j] >= lo[j]) & (pts[:, j] <= hi[j])
        return ok[0] if single else ok

    def wrap(self, p: np.ndarray) -> np.ndarray:
        """Wrap periodic coordinates into [lo, lo + period)."""
        pts, single = _as_batch(p, self.dim)
        out = pts.copy()
        for j, per in self.periodic.items():
            lo = self.box[j, 0]
            out[:, j] = lo + np.mod(out[:, j] - lo, per)
        return out[0] if single else out

    def distance(self, p: np.ndarray, q: np.ndarray) -> float:
        """Chart distance with periodic (and orbit-period) wrapping."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        d = p - q
        periods = dict(self.periodic)
        periods.update(self.orbit_periods)
        for j, per in periods.items():
            d[..., j] = (d[..., j] + per / 2.0) % per - per / 2.0
        return float(np.linalg.norm(d))


FrameModel = Union[ChartModel, LieModel]


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------

class Section:
    """A frame-coefficient combination sum_i c_i(p) e_i.

    Coefficients are scalars or callables of the chart point.  On a Lie model
    only constant coefficients are meaningful.
    """

    def __init__(self, coeffs: Sequence[Coefficient], name: str = ""):
        self.coeffs = tuple(coeffs)
        self.name = name

    @property
    def is_constant(self) -> bool:
        return all(not callable(c) for c in self.coeffs)

    def constant_coeffs(self) -> np.ndarray:
        if not self.is_constant:
            raise DimensionMismatch(f"section {self.name!r} has non-constant coefficients")
        return np.array([float(c) for c in self.coeffs])

    def coeff_at(self, p: np.ndarray) -> np.ndarray:
        """Coefficient vector(s) at p: shape (len,) or (n, len)."""
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        pts = p[None, :] if single else p
        cols = []
        for c in self.coeffs:
            if callable(c):
                v = np.asarray(c(pts), dtype=float)
                cols.append(np.broadcast_to(v, (pts.shape[0],)))
            else:
                cols.append(np.full(pts.shape[0], float(c)))
        out = np.stack(cols, axis=-1)
        return out[0] if single else out

    def chart_field(self, model: ChartModel) -> ChartVectorField:
        """Realize the section as an evaluable chart field."""
        if len(self.coeffs) != model.dim:
            raise DimensionMismatch("section does not match the model frame")
        frame = model.frame

        def components(pts):
            pts = np.atleast_2d(pts)
            co = np.atleast_2d(self.coeff_at(pts))
            out = np.zeros_like(pts)
            for i, f in enumerate(frame):
                out += co[:, i:i + 1] * np.atleast_2d(f(pts))
            return out

        return ChartVectorField(model.dim, components, box=None,
                                name=self.name or "section")

    def value(self, model: FrameModel, p: np.ndarray = None) -> np.ndarray:
        """Chart components (chart model) or frame coefficients (Lie model)."""
        if isinstance(model, LieModel):
            return self.constant_coeffs()
        if p is None:
            raise ValueError("chart sections need a point")
        return self.chart_field(model)(p)

    def __repr__(self):
        return f"Section({self.name or self.coeffs})"


def section_bracket(model: FrameModel, a: Section, b: Section,
                    p: np.ndarray = None, h: float = None) -> np.ndarray:
    """Bracket of two sections: exact contraction (Lie, constant coefficients)
    or chart bracket of the realized fields."""
    if isinstance(model, LieModel):
        return model.bracket(a.constant_coeffs(), b.constant_coeffs())
    return bracket_chart(a.chart_field(model), b.chart_field(model), p, h=h)


@dataclass
class DistributionSpec:
    """A distribution given by spanning sections over a frame model."""

    model: FrameModel
    span: Sequence[Section]

    def values(self, p: np.ndarray = None) -> np.ndarray:
        """Stack of spanning vectors at p, shape (k, dim) (or (n, k, dim))."""
        if isinstance(self.model, LieModel):
            return np.stack([s.constant_coeffs() for s in self.span])
        pts, single = _as_batch(p, self.model.dim)
        rows = np.stack([np.atleast_2d(s.chart_field(self.model)(pts))
                         for s in self.span], axis=1)
        return rows[0] if single else rows

    def validate(self, pts: np.ndarray = None, tol: float = None) -> None:
        """Spanning sections must stay linearly independent at the samples."""
        tol = DEFAULTS.rank_tol if tol is None else tol
        vals = self.values(pts)
        if vals.ndim == 2:
            vals = vals[None]
        rank, _ = rank_with_margin(vals, tol)
        if not np.all(rank == len(self.span)):
            raise DimensionMismatch("spanning sections lose independence at a sample")


# ---------------------------------------------------------------------------
# ranks
# ---------------------------------------------------------------------------

def rank_with_margin(vectors: np.ndarray, tol: float,
                     band: float = None) -> tuple[np.ndarray, np.ndarray]:
    """Batched rank of stacked row vectors, plus a marginal flag.

    ``vectors`` has shape (..., k, dim).  A decision is marginal when some
    singular value falls within a factor ``band`` of ``tol``.
    """
    band = DEFAULTS.marginal_band if band is None else band
    sv = np.linalg.svd(np.asarray(vectors, dtype=float), compute_uv=False)
    rank = (sv > tol).sum(axis=-1)
    marginal = ((sv > tol / band) & (sv < tol * band)).any(axis=-1)
    return rank, marginal


def distribution_rank(vectors: Sequence[np.ndarray], tol: float = None) -> int:
    """Number of singular values of the stacked matrix above ``tol``."""
    if len(list(vectors)) == 0:
        raise EmptyInput("no vectors supplied")
    tol = DEFAULTS.rank_tol if tol is None else float(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    mat = np.vstack([np.asarray(v, dtype=float) for v in vectors])
    rank, _ = rank_with_margin(mat, tol)
    return int(rank)


def derived_distribution(d: DistributionSpec, p: np.ndarray = None,
                         tol: float = None) -> list[np.ndarray]:
    """Spanning set of D_p + [D, D]_p, reduced by rank.

    Returns an orthonormal basis (rows) of the span of the section values
    together with all pairwise section brackets at ``p``.
    """
    tol = DEFAULTS.rank_tol if tol is None else float(tol)
    rows = [np.asarray(s.value(d.model, p), dtype=float) for s in d.span]
    k = len(d.span)
    for i in range(k):
        for j in range(i + 1, k):
            rows.append(section_bracket(d.model, d.span[i], d.span[j], p))
    mat = np.vstack(rows)
    u, sv, vt = np.linalg.svd(mat, full_matrices=False)
    r = int((sv > tol).sum())
    return [vt[i] for i in range(r)]
