"""Transverse 2-plane fields on gridded surfaces and C0-close rounded
meshes.

Each face of the surface is subdivided into m^2 subsquares.  The field is
built in three regimes and stitched:

* face interiors carry the constant orthogonal complement of the face;
* edge collars between non-coplanar faces carry a quarter-circle profile:
  the plane spanned by the vector from the rounding center to the projected
  point and the remaining coordinate axis;
* vertex patches interpolate along Grassmannian geodesics from a certified
  seed plane at the vertex out to the collar values on the subdivided link.

Transversality is measured numerically as the absolute determinant of the
4x4 matrix formed by an orthonormal tangent basis and the plane basis; a
sample is transverse when this margin exceeds the tolerance.  The seed
plane and the interpolation are certified per star class by dense sampling
and transported to arbitrary vertices by the classifying symmetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import starcomb
from .lattice import GridEdge, GridFace, Star, local_faces_at, star_cycle
from .surface import GriddedSurface, validate

__all__ = [
    "DEFAULT_TOL",
    "Subdivision",
    "Plane2",
    "PlaneSample",
    "EdgeRounding",
    "FieldResult",
    "Mesh",
    "OutOfDomain",
    "CoplanarEdge",
    "CertificationFailure",
    "StitchMismatch",
    "MeshNotClosed",
    "field_case1",
    "field_case2",
    "field_case3",
    "assemble_field",
    "certify_classes",
    "rounded_mesh",
    "write_field_csv",
    "obj_lines",
]

#: Default transversality tolerance for the determinant margin.
DEFAULT_TOL = 1e-6

_ORTHO_TOL = 1e-12


class OutOfDomain(ValueError):
    """Point lies outside the region a field case covers."""


class CoplanarEdge(ValueError):
    """The two faces at the edge span one plane; the flat continuation of
    the face-interior field applies instead of a rounding profile."""


class CertificationFailure(RuntimeError):
    """Dense sampling found a non-transverse plane in a vertex patch."""

    def __init__(self, class_id: int, worst_margin: float, where=None):
        self.class_id = class_id
        self.worst_margin = worst_margin
        self.where = where
        super().__init__(
            f"class {class_id}: margin {worst_margin:.3e} at {where}"
        )


class StitchMismatch(RuntimeError):
    """Two field regions disagree at a shared boundary point."""


class MeshNotClosed(RuntimeError):
    """Rounded mesh failed the closed-manifold edge check; defensive."""


@dataclass(frozen=True)
class Subdivision:
    """Each face splits into m^2 subsquares of side 1/m; m >= 2 keeps the
    edge and vertex collars disjoint."""

    m: int

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"subdivision needs m >= 2, got {self.m}")

    @property
    def h(self) -> float:
        return 1.0 / self.m


def _as_subdivision(m) -> Subdivision:
    return m if isinstance(m, Subdivision) else Subdivision(int(m))


def _unit(a: int) -> np.ndarray:
    v = np.zeros(4)
    v[abs(a) - 1] = 1.0 if a > 0 else -1.0
    return v


class Plane2:
    """A 2-plane through the origin in R^4, stored as an orthonormal basis
    pair (a point of the Grassmannian of 2-planes)."""

    __slots__ = ("b1", "b2")

    def __init__(self, b1, b2):
        b1 = np.asarray(b1, dtype=float)
        b2 = np.asarray(b2, dtype=float)
        if b1.shape != (4,) or b2.shape != (4,):
            raise ValueError("basis vectors must be 4-vectors")
        if (
            abs(b1 @ b1 - 1.0) > _ORTHO_TOL
            or abs(b2 @ b2 - 1.0) > _ORTHO_TOL
            or abs(b1 @ b2) > _ORTHO_TOL
        ):
            raise ValueError("basis must be orthonormal within 1e-12")
        self.b1 = b1
        self.b2 = b2
        self.b1.flags.writeable = False
        self.b2.flags.writeable = False

    @classmethod
    def from_vectors(cls, u, v) -> "Plane2":
        """Span of two independent vectors, orthonormalized."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        q, r = np.linalg.qr(np.stack([u, v], axis=1))
        if abs(r[0, 0] * r[1, 1]) < 1e-14:
            raise ValueError("vectors do not span a 2-plane")
        return cls(q[:, 0], q[:, 1])

    def basis(self) -> np.ndarray:
        return np.stack([self.b1, self.b2], axis=1)

    def projector(self) -> np.ndarray:
        b = self.basis()
        return b @ b.T

    def distance(self, other: "Plane2") -> float:
        """Spectral norm of the projector difference: the sine of the
        largest principal angle between the planes."""
        return float(np.linalg.norm(self.projector() - other.projector(), 2))

    def __repr__(self) -> str:
        return f"Plane2({self.b1.tolist()}, {self.b2.tolist()})"


def complement_plane(axes: Sequence[int]) -> Plane2:
    """Orthogonal complement of the coordinate plane on the given two axes."""
    i, j = (abs(a) for a in axes)
    rest = [k for k in (1, 2, 3, 4) if k not in (i, j)]
    return Plane2(_unit(rest[0]), _unit(rest[1]))


def margin_against(plane: Plane2, tangents: Iterable[tuple[np.ndarray, np.ndarray]]) -> float:
    """min over tangent bases (t1, t2) of |det[t1 t2 b1 b2]|."""
    out = math.inf
    for t1, t2 in tangents:
        m = np.column_stack([t1, t2, plane.b1, plane.b2])
        out = min(out, abs(float(np.linalg.det(m))))
    return out


@dataclass(frozen=True)
class PlaneSample:
    """A surface point with its field plane and transversality margin."""

    point: tuple[float, float, float, float]
    plane: Plane2
    margin: float
    case: int


# ---------------------------------------------------------------------------
# Cases 1 and 2
# ---------------------------------------------------------------------------


def field_case1(face: GridFace, y) -> Plane2:
    """Constant orthogonal complement of the face's support plane; valid
    for points in the open interior of the face."""
    y = np.asarray(y, dtype=float)
    i, j = face.axes
    for k in range(4):
        c = y[k] - face.base[k]
        if k in (i - 1, j - 1):
            if not 0.0 < c < 1.0:
                raise OutOfDomain(f"{tuple(y)} is not interior to {face}")
        elif abs(c) > 1e-9:
            raise OutOfDomain(f"{tuple(y)} is off the support plane of {face}")
    return complement_plane(face.axes)


@dataclass(frozen=True)
class EdgeRounding:
    """Quarter-circle rounding data at an edge between two non-coplanar
    faces.

    z is a point on the edge, d1/d2 the inward unit directions into the two
    faces, e_dir the unit direction along the edge, v12 the remaining
    coordinate axis, radius the rounding radius 1/m.  The circle of that
    radius centered at the opposite corner z' = z + radius*(d1+d2) is
    tangent to both face strips at their far lines.
    """

    z: tuple[float, float, float, float]
    e_dir: tuple[float, float, float, float]
    d1: tuple[float, float, float, float]
    d2: tuple[float, float, float, float]
    v12: tuple[float, float, float, float]
    radius: float

    @classmethod
    def at_edge(cls, edge: GridEdge, f1: GridFace, f2: GridFace, m) -> "EdgeRounding":
        sub = _as_subdivision(m)
        e_axis = edge.axis
        d1 = _inward(edge, f1)
        d2 = _inward(edge, f2)
        if abs(int(d1 @ d2)) == 1:
            raise CoplanarEdge(f"{f1} and {f2} span one plane at {edge}")
        used = {e_axis, int(np.argmax(np.abs(d1))) + 1, int(np.argmax(np.abs(d2))) + 1}
        rest = [k for k in (1, 2, 3, 4) if k not in used]
        assert len(rest) == 1
        return cls(
            tuple(float(x) for x in edge.base),
            tuple(_unit(e_axis)),
            tuple(d1),
            tuple(d2),
            tuple(_unit(rest[0])),
            sub.h,
        )

    @property
    def z_opposite(self) -> np.ndarray:
        return np.asarray(self.z) + self.radius * (np.asarray(self.d1) + np.asarray(self.d2))

    def profile_plane(self, s: float, side: int = 1) -> Plane2:
        """Plane at transverse distance s in [0, radius] from the edge into
        face `side` (1 or 2): span of the rounding radius vector and v12."""
        if not -1e-12 <= s <= self.radius + 1e-12:
            raise OutOfDomain(f"transverse coordinate {s} outside [0, {self.radius}]")
        da, db = (self.d1, self.d2) if side == 1 else (self.d2, self.d1)
        r = (s - self.radius) * np.asarray(da) - self.radius * np.asarray(db)
        return Plane2.from_vectors(r, np.asarray(self.v12))


def _inward(edge: GridEdge, f: GridFace) -> np.ndarray:
    """Unit direction from the edge into face f."""
    other = [a for a in f.axes if a != edge.axis]
    if len(other) != 1:
        raise ValueError(f"{f} does not flank {edge}")
    a = other[0]
    if edge.base[a - 1] == f.base[a - 1]:
        return _unit(a)
    if edge.base[a - 1] == f.base[a - 1] + 1:
        return -_unit(a)
    raise ValueError(f"{edge} is not an edge of {f}")


def field_case2(rounding: EdgeRounding, y) -> Plane2:
    """Collar field: project y along the edge direction onto the profile
    square and return the rounding plane there."""
    y = np.asarray(y, dtype=float)
    w = y - np.asarray(rounding.z)
    s1 = float(w @ np.asarray(rounding.d1))
    s2 = float(w @ np.asarray(rounding.d2))
    t = float(w @ np.asarray(rounding.e_dir))
    residual = w - s1 * np.asarray(rounding.d1) - s2 * np.asarray(rounding.d2) - t * np.asarray(rounding.e_dir)
    if np.max(np.abs(residual)) > 1e-9:
        raise OutOfDomain(f"{tuple(y)} is not in the collar of the edge")
    eps = 1e-12
    if s1 < -eps or s2 < -eps or min(s1, s2) > eps or max(s1, s2) > rounding.radius + eps:
        raise OutOfDomain(f"{tuple(y)} is not in the collar of the edge")
    if s1 >= s2:
        return rounding.profile_plane(max(s1, 0.0), side=1)
    return rounding.profile_plane(max(s2, 0.0), side=2)


# ---------------------------------------------------------------------------
# Grassmannian geodesics (vectorized over targets)
# ---------------------------------------------------------------------------


def geodesic_bases(a: np.ndarray, b: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Points along the Grassmannian geodesics from span(a) to span(b_k),
    evaluated at parameter t_k.

    a is (4,2) orthonormal; b is (N,4,2) orthonormal; t is (N,).  Returns
    (N,4,2) orthonormal bases.  Requires every target to be less than a
    right angle away in all principal directions.
    """
    b = np.asarray(b, dtype=float)
    t = np.asarray(t, dtype=float)
    m = np.einsum("ji,njk->nik", a, b)  # (N,2,2) = a^T b
    det = np.linalg.det(m)
    if np.any(np.abs(det) < 1e-12):
        raise ValueError("geodesic undefined: target orthogonal to seed")
    minv = np.linalg.inv(m)
    residual = b - np.einsum("ij,njk->nik", a, m)
    tan = np.einsum("nij,njk->nik", residual, minv)  # (N,4,2)
    u, s, vt = np.linalg.svd(tan, full_matrices=False)
    theta = np.arctan(s)  # (N,2)
    ang = theta * t[:, None]
    av = np.einsum("ij,nkj->nik", a, vt)  # a @ v  (N,4,2)
    g = av * np.cos(ang)[:, None, :] + u * np.sin(ang)[:, None, :]
    g = np.einsum("nij,njk->nik", g, vt)
    # re-orthonormalize against accumulated roundoff
    q1 = g[:, :, 0] / np.linalg.norm(g[:, :, 0], axis=1, keepdims=True)
    q2 = g[:, :, 1] - np.einsum("ni,ni->n", q1, g[:, :, 1])[:, None] * q1
    q2 = q2 / np.linalg.norm(q2, axis=1, keepdims=True)
    return np.stack([q1, q2], axis=2)


def _batch_margins(bases: np.ndarray, tangent: np.ndarray) -> np.ndarray:
    """|det[t1 t2 b1 b2]| for a batch of plane bases against one tangent
    basis; bases (N,4,2), tangent (4,2) -> (N,)."""
    n = bases.shape[0]
    mats = np.empty((n, 4, 4))
    mats[:, :, 0] = tangent[:, 0]
    mats[:, :, 1] = tangent[:, 1]
    mats[:, :, 2] = bases[:, :, 0]
    mats[:, :, 3] = bases[:, :, 1]
    return np.abs(np.linalg.det(mats))


# ---------------------------------------------------------------------------
# Case 3: certified vertex fields per star class
# ---------------------------------------------------------------------------


class VertexField:
    """Transverse plane field on the vertex patch of one star, in local
    fractional coordinates.

    The patch is, per face F_{u,v}, the corner subsquare {a*e_u + b*e_v :
    0 <= a,b <= 1/m}; coordinates here are the fractions (a*m, b*m) in
    [0,1]^2, which makes the construction independent of m.  The boundary
    max(a,b)=1 carries the collar profiles; the interior interpolates along
    geodesics from the seed plane at the vertex.
    """

    def __init__(self, star: Star, rng_seed: int = 20240211):
        self.star = star
        c = star.cycle
        n = len(c)
        self.faces = [(c[i], c[(i + 1) % n]) for i in range(n)]
        self._tangents = [
            np.stack([_unit(u), _unit(v)], axis=1) for u, v in self.faces
        ]
        # neighbor axis across the u-edge (previous face) and v-edge (next)
        self._prev_axis = [c[i - 1] for i in range(n)]
        self._next_axis = [c[(i + 2) % n] for i in range(n)]
        self._face_index = {}
        for i, (u, v) in enumerate(self.faces):
            self._face_index[(u, v)] = (i, False)
            self._face_index[(v, u)] = (i, True)
        self._grid_cache: dict[int, list[dict]] = {}
        self._bases_cache: dict[int, list[np.ndarray]] = {}
        self.seed = self._choose_seed(rng_seed)

    # -- boundary (link) planes ------------------------------------------

    def _link_basis(self, i: int, ahat: float, bhat: float) -> np.ndarray:
        """Collar plane basis at the boundary point of face i with
        fractional coordinates (ahat, bhat), max == 1."""
        u, v = self.faces[i]
        eu, ev = _unit(u), _unit(v)
        if ahat >= bhat:
            w = self._prev_axis[i]  # other face at the u-edge
            if w == -v:
                b = complement_plane((abs(u), abs(v))).basis()
            else:
                r = (bhat - 1.0) * ev - _unit(w)
                b = Plane2.from_vectors(r, _remaining_axis(u, v, w)).basis()
        else:
            w = self._next_axis[i]  # other face at the v-edge
            if w == -u:
                b = complement_plane((abs(u), abs(v))).basis()
            else:
                r = (ahat - 1.0) * eu - _unit(w)
                b = Plane2.from_vectors(r, _remaining_axis(u, v, w)).basis()
        return b

    def link_plane(self, i: int, ahat: float, bhat: float) -> Plane2:
        if max(ahat, bhat) < 1.0 - 1e-12:
            raise OutOfDomain("link points have max fractional coordinate 1")
        b = self._link_basis(i, ahat, bhat)
        return Plane2(b[:, 0], b[:, 1])

    # -- seed-independent grid data ----------------------------------------

    def _grid_data(self, grid: int) -> list[dict]:
        """Per face: fractional grid points, radial parameter, and the link
        target basis of each point's boundary projection."""
        data = self._grid_cache.get(grid)
        if data is not None:
            return data
        lin = np.linspace(0.0, 1.0, grid)
        ah, bh = np.meshgrid(lin, lin, indexing="ij")
        pts = np.stack([ah.ravel(), bh.ravel()], axis=1)
        tau = np.max(pts, axis=1)
        at_vertex = tau <= 1e-12
        on_link = tau >= 1.0 - 1e-12
        data = []
        for i in range(len(self.faces)):
            targets = np.empty((pts.shape[0], 4, 2))
            for k in range(pts.shape[0]):
                if at_vertex[k]:
                    targets[k] = 0.0
                    continue
                sa, sb = pts[k] / tau[k]
                targets[k] = self._link_basis(i, float(sa), float(sb))
            data.append(
                {
                    "pts": pts,
                    "tau": tau,
                    "at_vertex": at_vertex,
                    "on_link": on_link,
                    "targets": targets,
                }
            )
        self._grid_cache[grid] = data
        return data

    def _interp(self, face_data: dict, seed_basis: np.ndarray) -> np.ndarray:
        """Field bases over one face's cached grid for a given seed."""
        tau = face_data["tau"]
        targets = face_data["targets"]
        out = np.empty_like(targets)
        out[face_data["at_vertex"]] = seed_basis
        out[face_data["on_link"]] = targets[face_data["on_link"]]
        mid = ~(face_data["at_vertex"] | face_data["on_link"])
        if np.any(mid):
            out[mid] = geodesic_bases(seed_basis, targets[mid], tau[mid])
        return out

    def _min_margin_for(self, seed_basis: np.ndarray, grid: int):
        """(worst margin, location) of the interpolated field over the
        patch grid, margins taken against every incident face."""
        worst = self._vertex_margin(seed_basis)
        where = "vertex" if worst < math.inf else None
        n = len(self.faces)
        try:
            data = self._grid_data(grid)
            for i in range(n):
                fd = data[i]
                bases = self._interp(fd, seed_basis)
                margins = _batch_margins(bases, self._tangents[i])
                k = int(np.argmin(margins))
                if margins[k] < worst:
                    worst = float(margins[k])
                    where = (self.faces[i], tuple(fd["pts"][k]))
                # points on the two patch edges also meet a neighbor face
                for col, other in ((1, (i - 1) % n), (0, (i + 1) % n)):
                    sel = fd["pts"][:, col] <= 1e-12
                    em = _batch_margins(bases[sel], self._tangents[other])
                    k2 = int(np.argmin(em))
                    if em[k2] < worst:
                        worst = float(em[k2])
                        where = (self.faces[other], "edge ray")
        except ValueError:
            return -1.0, "geodesic undefined"
        return worst, where

    # -- seed selection ---------------------------------------------------

    def _vertex_margin(self, basis: np.ndarray) -> float:
        out = math.inf
        for t in self._tangents:
            m = np.column_stack([t, basis])
            out = min(out, abs(float(np.linalg.det(m))))
        return out

    def _choose_seed(self, rng_seed: int) -> Plane2:
        # stage 1: candidate planes scored by the vertex margin
        cands = []
        avg = np.zeros((4, 4))
        ks = 8
        for i in range(len(self.faces)):
            for k in range(ks + 1):
                for (ah, bh) in ((1.0, k / ks), (k / ks, 1.0)):
                    b = self._link_basis(i, ah, bh)
                    avg += b @ b.T
        vals, vecs = np.linalg.eigh(avg)
        cands.append(np.ascontiguousarray(vecs[:, 2:]))  # top-2 eigenspace
        for i, j in ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)):
            cands.append(np.stack([_unit(i), _unit(j)], axis=1))
        s2 = 1.0 / math.sqrt(2.0)
        for (i, j), (k, l) in (((1, 2), (3, 4)), ((1, 3), (2, 4)), ((1, 4), (2, 3))):
            for si in (1.0, -1.0):
                for sj in (1.0, -1.0):
                    cands.append(
                        np.stack(
                            [
                                s2 * (_unit(i) + si * _unit(j)),
                                s2 * (_unit(k) + sj * _unit(l)),
                            ],
                            axis=1,
                        )
                    )
        rng = np.random.default_rng(rng_seed)
        for _ in range(256):
            q, _ = np.linalg.qr(rng.standard_normal((4, 2)))
            cands.append(q)
        scored = sorted(
            ((self._vertex_margin(b), k) for k, b in enumerate(cands)),
            reverse=True,
        )
        # stage 2: re-score the leaders by the whole-patch minimum margin
        best = None
        best_score = -math.inf
        for _, k in scored[:24]:
            sc, _ = self._min_margin_for(cands[k], 9)
            if sc > best_score:
                best, best_score = cands[k], sc
        # stage 3: local polish with a shrinking random step
        step = 0.25
        for _ in range(120):
            q, _ = np.linalg.qr(best + step * rng.standard_normal((4, 2)))
            sc, _ = self._min_margin_for(q, 9)
            if sc > best_score:
                best, best_score = q, sc
            else:
                step = max(step * 0.95, 0.02)
        return Plane2(best[:, 0], best[:, 1])

    # -- evaluation --------------------------------------------------------

    def bases_grid(self, grid: int) -> list[np.ndarray]:
        """Final field bases per face over the (grid x grid) fractional
        grid, cached."""
        cached = self._bases_cache.get(grid)
        if cached is None:
            data = self._grid_data(grid)
            cached = [self._interp(fd, self.seed.basis()) for fd in data]
            self._bases_cache[grid] = cached
        return cached

    def grid_points(self, grid: int) -> np.ndarray:
        return self._grid_data(grid)[0]["pts"]

    def _bases_at(self, i: int, pts: np.ndarray) -> np.ndarray:
        """Interpolated plane bases at arbitrary fractional points of face
        i (single-shot path; grids should use bases_grid)."""
        sb = self.seed.basis()
        n = pts.shape[0]
        tau = np.max(pts, axis=1)
        out = np.empty((n, 4, 2))
        at_vertex = tau <= 1e-12
        out[at_vertex] = sb
        rest = ~at_vertex
        if np.any(rest):
            taur = tau[rest]
            scaled = pts[rest] / taur[:, None]
            targets = np.empty((int(rest.sum()), 4, 2))
            for k, (ah, bh) in enumerate(scaled):
                targets[k] = self._link_basis(i, float(ah), float(bh))
            on_link = taur >= 1.0 - 1e-12
            interior = ~on_link
            res = np.empty_like(targets)
            res[on_link] = targets[on_link]
            if np.any(interior):
                res[interior] = geodesic_bases(sb, targets[interior], taur[interior])
            out[rest] = res
        return out

    def plane_at(self, u: int, v: int, ahat: float, bhat: float) -> Plane2:
        """Field plane at fractional coordinates (ahat along u, bhat along
        v) of the face F_{u,v}."""
        i, flipped = self._face_index[(u, v)]
        if flipped:
            ahat, bhat = bhat, ahat
        b = self._bases_at(i, np.array([[ahat, bhat]]))[0]
        return Plane2(b[:, 0], b[:, 1])

    def incident_tangents(self, i: int, ahat: float, bhat: float) -> list[np.ndarray]:
        """Tangent bases of the faces meeting the given patch point."""
        out = [self._tangents[i]]
        n = len(self.faces)
        if ahat <= 1e-12 and bhat <= 1e-12:
            return list(self._tangents)
        if ahat <= 1e-12:
            out.append(self._tangents[(i + 1) % n])  # on the v-edge
        if bhat <= 1e-12:
            out.append(self._tangents[(i - 1) % n])  # on the u-edge
        return out

    def certify(self, grid: int = 33, tol: float = DEFAULT_TOL) -> float:
        """Min margin over a dense patch sweep; raises CertificationFailure
        below tol.  Margins are checked against every incident face."""
        self.bases_grid(grid)  # populate cache with the final field
        worst, where = self._min_margin_for(self.seed.basis(), grid)
        if worst <= tol:
            raise CertificationFailure(-1, worst, where)
        return worst


def _remaining_axis(u: int, v: int, w: int) -> np.ndarray:
    used = {abs(u), abs(v), abs(w)}
    rest = [k for k in (1, 2, 3, 4) if k not in used]
    assert len(rest) == 1
    return _unit(rest[0])


_VERTEX_FIELDS: dict[int, VertexField] = {}
_VERTEX_FIELD_MARGINS: dict[int, float] = {}


def reference_field(class_id: int, grid: int = 33, tol: float = DEFAULT_TOL) -> VertexField:
    """The cached certified vertex field for one star class, built on the
    class representative."""
    vf = _VERTEX_FIELDS.get(class_id)
    if vf is None:
        cls = starcomb.classify_all()[class_id - 1]
        assert cls.id == class_id
        vf = VertexField(cls.representative)
        try:
            _VERTEX_FIELD_MARGINS[class_id] = vf.certify(grid, tol)
        except CertificationFailure as exc:
            raise CertificationFailure(class_id, exc.worst_margin, exc.where) from None
        _VERTEX_FIELDS[class_id] = vf
    return vf


def certify_classes(grid: int = 33, tol: float = DEFAULT_TOL) -> dict[int, float]:
    """Certify every star class; maps class id to its minimum margin."""
    out = {}
    for cls in starcomb.classify_all():
        reference_field(cls.id, grid, tol)
        out[cls.id] = _VERTEX_FIELD_MARGINS[cls.id]
    return out


def field_case3(
    star: Star,
    m=4,
    grid: int = 33,
    tol: float = DEFAULT_TOL,
    origin=(0.0, 0.0, 0.0, 0.0),
) -> list[PlaneSample]:
    """Sampled vertex-patch field for a star at a grid vertex.

    Uses the certified reference field of the star's class, transported by
    the classifying symmetry.  Every sample's margin is checked against all
    faces incident to its location; CertificationFailure reports the worst
    offender if any falls to the tolerance or below.
    """
    sub = _as_subdivision(m)
    rep, g = starcomb.canonicalize(star)
    cls = starcomb.class_lookup()[rep]
    vf = reference_field(cls.id, grid, tol)
    gmat = np.asarray(g.matrix(), dtype=float)
    origin = np.asarray(origin, dtype=float)

    samples = []
    worst = (math.inf, None)
    h = sub.h
    ref_bases = vf.bases_grid(grid)
    ref_pts = vf.grid_points(grid)
    n = star.n
    for fi in range(n):
        u, v = star.cycle[fi], star.cycle[(fi + 1) % n]
        gu, gv = g.apply_axis(u), g.apply_axis(v)
        i, flipped = vf._face_index[(gu, gv)]
        eu, ev = _unit(u), _unit(v)
        # margins in the reference frame (orthogonal transport preserves them)
        margins = np.full(ref_pts.shape[0], math.inf)
        bases = ref_bases[i]
        margins = np.minimum(margins, _batch_margins(bases, vf._tangents[i]))
        for col, other in ((1, (i - 1) % len(vf.faces)), (0, (i + 1) % len(vf.faces))):
            sel = ref_pts[:, col] <= 1e-12
            margins[sel] = np.minimum(
                margins[sel], _batch_margins(bases[sel], vf._tangents[other])
            )
        at_vertex = np.max(ref_pts, axis=1) <= 1e-12
        if np.any(at_vertex):
            vm = vf._vertex_margin(vf.seed.basis())
            margins[at_vertex] = np.minimum(margins[at_vertex], vm)
        local = np.einsum("ji,njk->nik", gmat, bases)  # g^{-1} = g^T transport
        pts = ref_pts[:, ::-1] if flipped else ref_pts
        for k in range(pts.shape[0]):
            a_, b_ = pts[k]
            point = origin + h * (a_ * eu + b_ * ev)
            plane = Plane2(local[k][:, 0], local[k][:, 1])
            mg = float(margins[k])
            samples.append(PlaneSample(tuple(point), plane, mg, 3))
            if mg < worst[0]:
                worst = (mg, tuple(point))
    if worst[0] <= tol:
        raise CertificationFailure(cls.id, worst[0], worst[1])
    return samples


# ---------------------------------------------------------------------------
# Global assembly
# ---------------------------------------------------------------------------


@dataclass
class FieldResult:
    """Assembled global field: samples plus the continuity diagnostics."""

    samples: list[PlaneSample]
    min_margin: float
    case_counts: dict[int, int]
    interface_max_distance: float
    case12_interface_max: float
    lipschitz_ratio: float

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)


def _face_frame(f: GridFace):
    i, j = f.axes
    return np.asarray(f.base, dtype=float), _unit(i), _unit(j)


def assemble_field(
    surface: GriddedSurface | Iterable[GridFace],
    m=4,
    density: int = 2,
    tol: float = DEFAULT_TOL,
) -> FieldResult:
    """Stitch Cases 1-3 over a validated surface.

    density is the number of sample intervals per subsquare side.  Region
    boundaries are sampled by both neighbors; the duplicates are compared
    (StitchMismatch above 1e-9 in Grassmannian distance) and the worst
    adjacent-sample ratio (plane distance / point distance) is reported as
    the continuity bound.
    """
    surf = surface if isinstance(surface, GriddedSurface) else GriddedSurface(surface)
    report = validate(surf)
    if not report.is_closed_manifold:
        raise ValueError(f"surface does not validate: {report.violations[:3]}")
    sub = _as_subdivision(m)
    mm, h = sub.m, sub.h
    dens = int(density)
    if dens < 1:
        raise ValueError("density must be >= 1")

    inc = surf.edge_incidence()
    samples: list[PlaneSample] = []
    # point key -> list of (case, basis) for interface checks
    seen: dict[tuple, list[tuple[int, np.ndarray]]] = {}
    lipschitz = 0.0

    def emit(point: np.ndarray, plane: Plane2, margin: float, case: int):
        key = tuple(round(float(x), 9) for x in point)
        samples.append(PlaneSample(tuple(float(x) for x in point), plane, margin, case))
        seen.setdefault(key, []).append((case, plane.basis()))

    def grid_lipschitz(points: np.ndarray, bases: np.ndarray, shape: tuple[int, int]):
        nonlocal lipschitz
        pa = points.reshape(shape + (4,))
        ba = bases.reshape(shape + (4, 2))
        for axis in (0, 1):
            p1 = pa if axis == 0 else pa.transpose(1, 0, 2)
            b1 = ba if axis == 0 else ba.transpose(1, 0, 2, 3)
            dp = np.linalg.norm(p1[1:] - p1[:-1], axis=-1)
            pr1 = np.einsum("...ij,...kj->...ik", b1[1:], b1[1:])
            pr0 = np.einsum("...ij,...kj->...ik", b1[:-1], b1[:-1])
            dd = np.linalg.norm(pr1 - pr0, ord=2, axis=(-2, -1))
            with np.errstate(invalid="ignore", divide="ignore"):
                ratios = np.where(dp > 1e-12, dd / dp, 0.0)
            if ratios.size:
                lipschitz = max(lipschitz, float(np.max(ratios)))

    # --- per-face interior and collar regions
    lin = np.linspace(0.0, 1.0, dens + 1)
    for f in sorted(surf.faces):
        base, eu, ev = _face_frame(f)
        comp = complement_plane(f.axes)
        tangent = np.stack([eu, ev], axis=1)
        partner_tangent: dict[GridEdge, np.ndarray] = {}
        for p in range(mm):
            for q in range(mm):
                corner_p = p in (0, mm - 1)
                corner_q = q in (0, mm - 1)
                if corner_p and corner_q:
                    continue  # vertex patch, handled per vertex
                aa, bb = np.meshgrid((p + lin) * h, (q + lin) * h, indexing="ij")
                pts = base + aa.ravel()[:, None] * eu + bb.ravel()[:, None] * ev
                shape = (dens + 1, dens + 1)
                if not corner_p and not corner_q:
                    for k in range(pts.shape[0]):
                        emit(pts[k], comp, 1.0, 1)
                    grid_lipschitz(
                        pts, np.broadcast_to(comp.basis(), pts.shape[:1] + (4, 2)), shape
                    )
                    continue
                edge = _collar_edge(f, p, q, mm)
                partner = next(g_ for g_ in inc[edge] if g_ != f)
                if edge not in partner_tangent:
                    _, pt1, pt2 = _face_frame(partner)
                    partner_tangent[edge] = np.stack([pt1, pt2], axis=1)
                d_in = _inward(edge, f)
                coplanar = abs(int(d_in @ _inward(edge, partner))) == 1
                s_vals = _transverse_coords(pts, edge, d_in)
                rounding = None
                if not coplanar:
                    rounding = EdgeRounding.at_edge(edge, f, partner, sub)
                bases = np.empty((pts.shape[0], 4, 2))
                for k in range(pts.shape[0]):
                    s = min(max(float(s_vals[k]), 0.0), h)
                    if rounding is None:
                        plane = comp
                        case = 1
                    else:
                        plane = rounding.profile_plane(s, side=1)
                        case = 2
                    tangents = [(tangent[:, 0], tangent[:, 1])]
                    if s <= 1e-12:
                        pt_ = partner_tangent[edge]
                        tangents.append((pt_[:, 0], pt_[:, 1]))
                    bases[k] = plane.basis()
                    emit(pts[k], plane, margin_against(plane, tangents), case)
                grid_lipschitz(pts, bases, shape)

    # --- vertex patches
    at = surf.faces_at()
    for v in sorted(surf.vertices()):
        star = star_cycle(local_faces_at(v, at[v]))
        vsamples = field_case3(star, sub, grid=dens + 1, tol=tol, origin=v)
        for smp in vsamples:
            emit(np.asarray(smp.point), smp.plane, smp.margin, 3)
        # continuity within each face grid of the patch
        g = dens + 1
        for fi in range(star.n):
            chunk = vsamples[fi * g * g : (fi + 1) * g * g]
            pts = np.asarray([s.point for s in chunk])
            bases = np.asarray([s.plane.basis() for s in chunk])
            grid_lipschitz(pts, bases, (g, g))

    # --- interface agreement
    interface_max = 0.0
    case12_max = 0.0
    for key, entries in seen.items():
        if len(entries) < 2:
            continue
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                ci, bi = entries[i]
                cj, bj = entries[j]
                d = float(np.linalg.norm(bi @ bi.T - bj @ bj.T, 2))
                interface_max = max(interface_max, d)
                if {ci, cj} == {1, 2}:
                    case12_max = max(case12_max, d)
                if d > 1e-9:
                    raise StitchMismatch(f"{d:.3e} at {key} between cases {ci},{cj}")

    min_margin = min((s.margin for s in samples), default=math.inf)
    if min_margin <= tol:
        bad = min(samples, key=lambda s: s.margin)
        raise CertificationFailure(-1, bad.margin, bad.point)
    counts: dict[int, int] = {}
    for s in samples:
        counts[s.case] = counts.get(s.case, 0) + 1
    return FieldResult(
        samples=samples,
        min_margin=min_margin,
        case_counts=counts,
        interface_max_distance=interface_max,
        case12_interface_max=case12_max,
        lipschitz_ratio=lipschitz,
    )


def _collar_edge(f: GridFace, p: int, q: int, m: int) -> GridEdge:
    """The grid edge flanked by subsquare (p, q) of face f; the subsquare
    must lie on the face border but not in a corner."""
    i, j = f.axes
    base = list(f.base)
    if q in (0, m - 1):
        if q == m - 1:
            base[j - 1] += 1
        return GridEdge(tuple(base), i)
    if p in (0, m - 1):
        if p == m - 1:
            base[i - 1] += 1
        return GridEdge(tuple(base), j)
    raise ValueError(f"subsquare ({p},{q}) is interior")


def _transverse_coords(pts: np.ndarray, edge: GridEdge, d_in: np.ndarray) -> np.ndarray:
    """Distance of each point from the edge line, measured along d_in."""
    rel = pts - np.asarray(edge.base, dtype=float)
    return rel @ d_in


# ---------------------------------------------------------------------------
# Rounded mesh
# ---------------------------------------------------------------------------


@dataclass
class Mesh:
    """Triangle mesh with 4-coordinate vertices."""

    vertices: list[tuple[float, float, float, float]]
    triangles: list[tuple[int, int, int]]

    def edges(self) -> dict[frozenset, int]:
        count: dict[frozenset, int] = {}
        for a, b, c in self.triangles:
            for e in (frozenset((a, b)), frozenset((b, c)), frozenset((a, c))):
                count[e] = count.get(e, 0) + 1
        return count

    @property
    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges()) + len(self.triangles)

    def is_closed(self) -> bool:
        return all(k == 2 for k in self.edges().values())

    def is_orientable(self) -> bool:
        """Orientation propagation over triangle adjacency."""
        adj: dict[frozenset, list[int]] = {}
        for idx, (a, b, c) in enumerate(self.triangles):
            for e in (frozenset((a, b)), frozenset((b, c)), frozenset((a, c))):
                adj.setdefault(e, []).append(idx)
        orient: dict[int, int] = {}
        dir_edges = []
        for a, b, c in self.triangles:
            dir_edges.append({(a, b), (b, c), (c, a)})
        for seed in range(len(self.triangles)):
            if seed in orient:
                continue
            orient[seed] = 1
            stack = [seed]
            while stack:
                t = stack.pop()
                for e, ts in adj.items():
                    if t not in ts:
                        continue
                    for t2 in ts:
                        if t2 == t:
                            continue
                        a, b = tuple(e)
                        t_has = (a, b) in dir_edges[t]
                        t2_has = (a, b) in dir_edges[t2]
                        # consistent iff they traverse e oppositely
                        needed = orient[t] if t_has != t2_has else -orient[t]
                        if t2 in orient:
                            if orient[t2] != needed:
                                return False
                        else:
                            orient[t2] = needed
                            stack.append(t2)
        return True

    def max_deviation(self, faces: Iterable[GridFace]) -> float:
        """Max distance from mesh vertices to the exact face set."""
        fl = sorted(faces)
        worst = 0.0
        for p in self.vertices:
            best = math.inf
            for f in fl:
                d2 = 0.0
                for ax in range(4):
                    c = p[ax] - f.base[ax]
                    if (ax + 1) in f.axes:
                        c = min(max(c, 0.0), 1.0) - c
                    d2 += c * c
                best = min(best, d2)
            worst = max(worst, math.sqrt(best))
        return worst


class _MeshBuilder:
    def __init__(self):
        self.vertices: list[tuple[float, ...]] = []
        self.index: dict[tuple, int] = {}
        self.triangles: list[tuple[int, int, int]] = []

    def vid(self, p) -> int:
        key = tuple(round(float(x), 9) for x in p)
        k = self.index.get(key)
        if k is None:
            k = len(self.vertices)
            self.index[key] = k
            self.vertices.append(tuple(float(x) for x in p))
        return k

    def tri(self, a, b, c):
        i, j, k = self.vid(a), self.vid(b), self.vid(c)
        if len({i, j, k}) == 3:
            self.triangles.append((i, j, k))

    def quad(self, a, b, c, d):
        self.tri(a, b, c)
        self.tri(a, c, d)


def rounded_mesh(
    surface: GriddedSurface | Iterable[GridFace],
    m=4,
    arc_segments: int = 4,
) -> Mesh:
    """C0-close smooth-looking mesh: flat face interiors, quarter-cylinder
    strips of radius 1/m along non-coplanar edges, and vertex patches
    coned from each grid vertex to its rounded link polygon.

    The result is closed whenever the surface validates; Hausdorff
    deviation from the surface is bounded by (1 - sqrt(2)/2)/m < 2/m.
    """
    surf = surface if isinstance(surface, GriddedSurface) else GriddedSurface(surface)
    report = validate(surf)
    if not report.is_closed_manifold:
        raise ValueError(f"surface does not validate: {report.violations[:3]}")
    sub = _as_subdivision(m)
    mm, h = sub.m, sub.h
    if arc_segments < 1:
        raise ValueError("arc_segments must be >= 1")

    inc = surf.edge_incidence()
    rounded: dict[GridEdge, bool] = {}
    for e, fs in inc.items():
        d1, d2 = _inward(e, fs[0]), _inward(e, fs[1])
        rounded[e] = abs(int(d1 @ d2)) != 1

    b = _MeshBuilder()

    # flat interiors
    for f in sorted(surf.faces):
        base, eu, ev = _face_frame(f)
        i, j = f.axes
        lo_a = 1 if rounded[_face_edge(f, "a0")] else 0
        hi_a = 1 if rounded[_face_edge(f, "a1")] else 0
        lo_b = 1 if rounded[_face_edge(f, "b0")] else 0
        hi_b = 1 if rounded[_face_edge(f, "b1")] else 0
        for p in range(lo_a, mm - hi_a):
            for q in range(lo_b, mm - hi_b):
                c00 = base + (p * h) * eu + (q * h) * ev
                c10 = base + ((p + 1) * h) * eu + (q * h) * ev
                c11 = base + ((p + 1) * h) * eu + ((q + 1) * h) * ev
                c01 = base + (p * h) * eu + ((q + 1) * h) * ev
                b.quad(c00, c10, c11, c01)

    # quarter-cylinder strips along rounded edges
    for e in sorted(rounded):
        if not rounded[e]:
            continue
        f1, f2 = inc[e]
        d1, d2 = _inward(e, f1), _inward(e, f2)
        ebase = np.asarray(e.base, dtype=float)
        edir = _unit(e.axis)
        profile = _arc_points(h, d1, d2, arc_segments)
        stations = [ebase + (t * h) * edir for t in range(1, mm)]
        for s0, s1 in zip(stations, stations[1:]):
            for k in range(arc_segments):
                b.quad(
                    s0 + profile[k], s0 + profile[k + 1],
                    s1 + profile[k + 1], s1 + profile[k],
                )

    # vertex patches: fan from the vertex to its rounded link polygon
    at = surf.faces_at()
    for v in sorted(surf.vertices()):
        star = star_cycle(local_faces_at(v, at[v]))
        c = star.cycle
        n = star.n
        v0 = np.asarray(v, dtype=float)
        poly: list[np.ndarray] = []
        for i in range(n):
            u_prev, u, u_next = c[i - 1], c[i], c[(i + 1) % n]
            ze = v0 + h * _unit(u)
            if u_prev == -u_next:
                poly.append(ze)  # coplanar crossing keeps the link corner
            else:
                d1, d2 = _unit(u_prev), _unit(u_next)
                arc = _arc_points(h, d1, d2, arc_segments)
                poly.extend(ze + a for a in arc)
            poly.append(v0 + h * (_unit(u) + _unit(u_next)))  # flat corner
        for k in range(len(poly)):
            b.tri(v0, poly[k], poly[(k + 1) % len(poly)])

    mesh = Mesh(b.vertices, b.triangles)
    if not mesh.is_closed():
        counts = mesh.edges()
        bad = [e for e, k in counts.items() if k != 2][:3]
        raise MeshNotClosed(f"{len(bad)}+ open or crowded mesh edges, e.g. {bad}")
    return mesh


def _face_edge(f: GridFace, which: str) -> GridEdge:
    i, j = f.axes
    base = list(f.base)
    if which == "a0":
        return GridEdge(tuple(base), j)
    if which == "a1":
        base[i - 1] += 1
        return GridEdge(tuple(base), j)
    if which == "b0":
        return GridEdge(tuple(base), i)
    base[j - 1] += 1
    return GridEdge(tuple(base), i)


def _arc_points(radius: float, d1: np.ndarray, d2: np.ndarray, segments: int) -> list[np.ndarray]:
    """Chord points of the quarter arc rounding the corner between inward
    directions d1 and d2, relative to the edge point; runs from the d1 side
    to the d2 side."""
    out = []
    for k in range(segments + 1):
        phi = 0.5 * math.pi * k / segments
        out.append(radius * ((1.0 - math.sin(phi)) * d1 + (1.0 - math.cos(phi)) * d2))
    return out


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_field_csv(samples: Iterable[PlaneSample]) -> str:
    """CSV text: point, both basis vectors, margin, case."""
    cols = (
        [f"x{i}" for i in range(1, 5)]
        + [f"b1_{i}" for i in range(1, 5)]
        + [f"b2_{i}" for i in range(1, 5)]
        + ["margin", "case"]
    )
    lines = [",".join(cols)]
    for s in samples:
        row = (
            [_fmt(x) for x in s.point]
            + [_fmt(x) for x in s.plane.b1]
            + [_fmt(x) for x in s.plane.b2]
            + [_fmt(s.margin), str(s.case)]
        )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def obj_lines(mesh: Mesh) -> tuple[str, dict | None]:
    """OBJ text for the mesh, plus a sidecar description when the surface
    does not fit a hyperplane.

    If some coordinate is constant over all vertices it is dropped and
    noted in a comment; otherwise vertices are written with four columns
    and the sidecar names them.
    """
    verts = np.asarray(mesh.vertices, dtype=float)
    const_axis = None
    for ax in range(4):
        if np.all(np.abs(verts[:, ax] - verts[0, ax]) < 1e-12):
            const_axis = ax
            break
    lines = []
    sidecar = None
    if const_axis is not None:
        keep = [ax for ax in range(4) if ax != const_axis]
        lines.append(
            f"# projected from R^4: coordinate x{const_axis + 1} constant at "
            f"{_fmt(float(verts[0, const_axis]))}"
        )
        for p in mesh.vertices:
            lines.append("v " + " ".join(_fmt(p[ax]) for ax in keep))
    else:
        lines.append("# extended OBJ: four coordinates per vertex")
        for p in mesh.vertices:
            lines.append("v " + " ".join(_fmt(x) for x in p))
        sidecar = {
            "format": "obj-4d",
            "columns": ["x1", "x2", "x3", "x4"],
            "note": "vertex lines carry four coordinates; no projection applied",
        }
    for a, bq, c in mesh.triangles:
        lines.append(f"f {a + 1} {bq + 1} {c + 1}")
    return "\n".join(lines) + "\n", sidecar
