"""Global gridded surfaces: construction from 3-chains, validation as
closed 2-manifolds in the grid's 2-skeleton, topological invariants, and
per-vertex star classification.

A face set is a closed manifold iff every incident grid edge lies on
exactly two faces and the faces at every vertex assemble into one single
star cycle.  Vertex and edge sets are always derived from the faces; there
is no separate storage.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import starcomb
from .lattice import (
    GridEdge,
    GridFace,
    Star,
    StarError,
    edges_of_face,
    local_faces_at,
    star_cycle,
)

__all__ = [
    "GridCell",
    "GriddedSurface",
    "SurfaceReport",
    "validate",
    "boundary_of_3chain",
    "stars_of",
    "random_cell_chain",
    "cube_sphere",
    "box_sphere",
    "ring_torus",
    "eight_star_sphere",
    "surface_to_obj",
    "surface_from_obj",
    "cells_to_obj",
    "cells_from_obj",
    "report_to_obj",
]

@dataclass(frozen=True, order=True)
class GridCell:
    """A unit 3-cell of the grid: base point plus three distinct positive
    axes it spans."""

    base: tuple[int, int, int, int]
    axes: tuple[int, int, int]

    def __init__(self, base: Iterable[int], axes: Iterable[int]):
        base = tuple(int(x) for x in base)
        ax = tuple(sorted(int(a) for a in axes))
        if len(base) != 4:
            raise ValueError(f"base must be a 4-tuple, got {base}")
        if len(ax) != 3 or len(set(ax)) != 3 or not all(1 <= a <= 4 for a in ax):
            raise ValueError(f"axes must be three distinct indices in 1..4, got {ax}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "axes", ax)

    def boundary_faces(self) -> tuple[GridFace, ...]:
        """The six square faces of the cell."""
        out = []
        for k in range(3):
            c = self.axes[k]
            pair = tuple(a for a in self.axes if a != c)
            out.append(GridFace(self.base, pair))
            shifted = list(self.base)
            shifted[c - 1] += 1
            out.append(GridFace(tuple(shifted), pair))
        return tuple(out)


class GriddedSurface:
    """An immutable finite set of grid 2-faces, with derived incidence."""

    def __init__(self, faces: Iterable[GridFace]):
        self.faces: frozenset[GridFace] = frozenset(faces)

    def __len__(self) -> int:
        return len(self.faces)

    def __eq__(self, other) -> bool:
        return isinstance(other, GriddedSurface) and self.faces == other.faces

    def __hash__(self) -> int:
        return hash(self.faces)

    def vertices(self) -> set[tuple[int, ...]]:
        out = set()
        for f in self.faces:
            out.update(f.corners())
        return out

    def edge_incidence(self) -> dict[GridEdge, list[GridFace]]:
        inc: dict[GridEdge, list[GridFace]] = {}
        for f in sorted(self.faces):
            for e in edges_of_face(f):
                inc.setdefault(e, []).append(f)
        return inc

    def faces_at(self) -> dict[tuple[int, ...], list[GridFace]]:
        at: dict[tuple[int, ...], list[GridFace]] = {}
        for f in sorted(self.faces):
            for v in f.corners():
                at.setdefault(v, []).append(f)
        return at


@dataclass
class SurfaceReport:
    """Validation outcome for one face set."""

    face_count: int
    vertex_count: int
    edge_count: int
    euler_characteristic: int
    is_closed_manifold: bool
    orientable: bool | None
    components: int
    genus_per_component: list[int | None]
    star_histogram: dict[int, int] = field(default_factory=dict)
    violations: list[tuple[str, str]] = field(default_factory=list)


def _oriented_boundary(f: GridFace, o: int):
    """Directed boundary loop of f with orientation o in {+1, -1}."""
    c0, c1, c3, c2 = f.corners()  # base, +ei, +ej, +ei+ej
    loop = (c0, c1, c2, c3) if o > 0 else (c3, c2, c1, c0)
    return tuple((loop[i], loop[(i + 1) % 4]) for i in range(4))


def _component_split(faces: list[GridFace], inc: Mapping[GridEdge, list[GridFace]]):
    comp: dict[GridFace, int] = {}
    n = 0
    for seed in faces:
        if seed in comp:
            continue
        stack = [seed]
        comp[seed] = n
        while stack:
            f = stack.pop()
            for e in edges_of_face(f):
                for g in inc[e]:
                    if g not in comp:
                        comp[g] = n
                        stack.append(g)
        n += 1
    return comp, n


def _orient(faces: list[GridFace], inc: Mapping[GridEdge, list[GridFace]]) -> bool:
    """Propagate compatible orientations; True iff consistent everywhere.

    Adjacent faces must traverse their shared edge in opposite directions.
    Only meaningful when every edge has exactly two faces.
    """
    orient: dict[GridFace, int] = {}
    for seed in faces:
        if seed in orient:
            continue
        orient[seed] = 1
        stack = [seed]
        while stack:
            f = stack.pop()
            dirs = dict()
            for p, q in _oriented_boundary(f, orient[f]):
                dirs[frozenset((p, q))] = (p, q)
            for e in edges_of_face(f):
                a, b = e.endpoints()
                for g in inc[e]:
                    if g == f:
                        continue
                    # g must run the edge opposite to f
                    fd = dirs[frozenset((a, b))]
                    for o in (1, -1):
                        gdirs = {
                            frozenset((p, q)): (p, q)
                            for p, q in _oriented_boundary(g, o)
                        }
                        if gdirs[frozenset((a, b))] == (fd[1], fd[0]):
                            needed = o
                            break
                    if g in orient:
                        if orient[g] != needed:
                            return False
                    else:
                        orient[g] = needed
                        stack.append(g)
    return True


def validate(faces: Iterable[GridFace]) -> SurfaceReport:
    """Full validation report for a face set.

    is_closed_manifold is True iff every edge lies on exactly two faces and
    the faces at every vertex form one single star cycle.  Violations are
    reported, never raised.
    """
    surf = faces if isinstance(faces, GriddedSurface) else GriddedSurface(faces)
    face_list = sorted(surf.faces)
    inc = surf.edge_incidence()
    verts = surf.vertices()
    violations: list[tuple[str, str]] = []

    for e, fs in sorted(inc.items()):
        if len(fs) != 2:
            violations.append((f"edge {(e.base, e.axis)}", f"lies on {len(fs)} faces"))

    vertex_stars: dict[tuple[int, ...], Star] = {}
    if not violations:
        at = surf.faces_at()
        for v in sorted(verts):
            try:
                vertex_stars[v] = star_cycle(local_faces_at(v, at[v]))
            except StarError as exc:
                violations.append((f"vertex {v}", str(exc)))

    is_manifold = not violations and len(face_list) > 0
    chi = len(verts) - len(inc) + len(face_list)

    comp_of, n_comp = _component_split(face_list, inc) if face_list else ({}, 0)

    orientable: bool | None = None
    if is_manifold:
        orientable = _orient(face_list, inc)

    genus: list[int | None] = []
    for ci in range(n_comp):
        cfaces = [f for f in face_list if comp_of[f] == ci]
        if not is_manifold or not orientable:
            genus.append(None)
            continue
        cverts = set()
        cedges = set()
        for f in cfaces:
            cverts.update(f.corners())
            cedges.update(edges_of_face(f))
        cchi = len(cverts) - len(cedges) + len(cfaces)
        genus.append((2 - cchi) // 2)

    histogram: dict[int, int] = {}
    if is_manifold:
        lookup = starcomb.class_lookup()
        for v, s in vertex_stars.items():
            rep, _ = starcomb.canonicalize(s)
            cid = lookup[rep].id
            histogram[cid] = histogram.get(cid, 0) + 1

    return SurfaceReport(
        face_count=len(face_list),
        vertex_count=len(verts),
        edge_count=len(inc),
        euler_characteristic=chi,
        is_closed_manifold=is_manifold,
        orientable=orientable,
        components=n_comp,
        genus_per_component=genus,
        star_histogram=histogram,
        violations=violations,
    )


def boundary_of_3chain(cells: Iterable[GridCell]) -> set[GridFace]:
    """Mod-2 boundary of a set of 3-cells: the faces lying on an odd number
    of cell boundaries."""
    count: dict[GridFace, int] = {}
    for c in set(cells):
        for f in c.boundary_faces():
            count[f] = count.get(f, 0) + 1
    return {f for f, k in count.items() if k % 2 == 1}


def stars_of(surface: GriddedSurface | Iterable[GridFace]) -> dict[tuple[int, ...], int]:
    """Classify the star of every vertex; maps vertex to class id.

    Star assembly errors propagate with the vertex location attached.
    """
    surf = surface if isinstance(surface, GriddedSurface) else GriddedSurface(surface)
    lookup = starcomb.class_lookup()
    out = {}
    for v, fs in sorted(surf.faces_at().items()):
        try:
            s = star_cycle(local_faces_at(v, fs))
        except StarError as exc:
            raise type(exc)(f"at vertex {v}: {exc}") from exc
        rep, _ = starcomb.canonicalize(s)
        out[v] = lookup[rep].id
    return out


# ---------------------------------------------------------------------------
# Fixtures and corpus generation
# ---------------------------------------------------------------------------


def cube_sphere() -> GriddedSurface:
    """Boundary of the single 3-cell [0,1]^3 x {0}: a 6-face 2-sphere."""
    return GriddedSurface(boundary_of_3chain([GridCell((0, 0, 0, 0), (1, 2, 3))]))


def box_sphere(a: int = 2, b: int = 2, c: int = 1) -> GriddedSurface:
    """Boundary of an a x b x c box of 3-cells in the {1,2,3} directions."""
    cells = [
        GridCell((x, y, z, 0), (1, 2, 3))
        for x in range(a)
        for y in range(b)
        for z in range(c)
    ]
    return GriddedSurface(boundary_of_3chain(cells))


def ring_torus() -> GriddedSurface:
    """Boundary of a 3x3x1 ring of 3-cells (center removed): a torus."""
    cells = [
        GridCell((x, y, 0, 0), (1, 2, 3))
        for x in range(3)
        for y in range(3)
        if (x, y) != (1, 1)
    ]
    return GriddedSurface(boundary_of_3chain(cells))


def eight_star_sphere() -> GriddedSurface:
    """A 26-face 2-sphere whose star at the origin has eight faces, one in
    each signed direction pair of every coordinate plane.

    Built from six 3-cells meeting at the origin; found by solving for cell
    subsets whose triangle stars at the origin cancel to an 8-cycle.
    """
    cells = [
        GridCell((0, 0, 0, 0), (1, 2, 3)),
        GridCell((0, -1, 0, 0), (1, 2, 3)),
        GridCell((0, -1, -1, 0), (1, 2, 3)),
        GridCell((-1, -1, 0, 0), (1, 2, 3)),
        GridCell((0, 0, -1, -1), (1, 3, 4)),
        GridCell((-1, 0, 0, 0), (1, 3, 4)),
    ]
    return GriddedSurface(boundary_of_3chain(cells))


def random_cell_chain(seed: int, n_cells: int) -> set[GridCell]:
    """A random connected chain of distinct 3-cells, reproducible from the
    seed.  Growth steps shift along a spanned axis or swap the axis triple,
    so chains leave any single hyperplane."""
    rng = random.Random(seed)
    triples = [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)]
    cells = {GridCell((0, 0, 0, 0), rng.choice(triples))}
    while len(cells) < n_cells:
        cur = rng.choice(sorted(cells))
        candidates = []
        for a in cur.axes:
            for d in (-1, 1):
                base = list(cur.base)
                base[a - 1] += d
                candidates.append(GridCell(tuple(base), cur.axes))
        for t in triples:
            if t != cur.axes:
                candidates.append(GridCell(cur.base, t))
        new = [c for c in candidates if c not in cells]
        if new:
            cells.add(rng.choice(new))
    return cells


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def surface_to_obj(surf: GriddedSurface) -> dict:
    return {
        "faces": [
            {"base": list(f.base), "axes": list(f.axes)} for f in sorted(surf.faces)
        ]
    }


def surface_from_obj(obj: dict) -> GriddedSurface:
    return GriddedSurface(GridFace(f["base"], f["axes"]) for f in obj["faces"])


def cells_to_obj(cells: Iterable[GridCell]) -> dict:
    return {
        "cells": [
            {"base": list(c.base), "axes": list(c.axes)} for c in sorted(set(cells))
        ]
    }


def cells_from_obj(obj: dict) -> set[GridCell]:
    return {GridCell(c["base"], c["axes"]) for c in obj["cells"]}


def report_to_obj(rep: SurfaceReport) -> dict:
    return {
        "face_count": rep.face_count,
        "vertex_count": rep.vertex_count,
        "edge_count": rep.edge_count,
        "euler_characteristic": rep.euler_characteristic,
        "is_closed_manifold": rep.is_closed_manifold,
        "orientable": rep.orientable,
        "components": rep.components,
        "genus_per_component": rep.genus_per_component,
        "star_histogram": {str(k): v for k, v in sorted(rep.star_histogram.items())},
        "violations": [list(v) for v in rep.violations],
    }
