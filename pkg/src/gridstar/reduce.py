"""Contraction moves on vertex stars, reduction to a base case, and the
squared-link boundary polygon.

A contraction move replaces two faces F_{x,a}, F_{a,y} sharing the edge
along axis a with the single face F_{x,y}; geometrically this is an ambient
isotopy of the surface across the 3-cell spanned by e_a, e_x, e_y.  Every
star contracts to either a triangle or the planar four-face star, and the
recorded move sequence certifies that the star's boundary link is isotopic
to the boundary of a planar square, i.e. unknotted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .lattice import LocalFace, Star, StarError, star_cycle

__all__ = [
    "Move",
    "ReductionCertificate",
    "SquaredLink",
    "Stuck",
    "NotSimple",
    "legal_moves",
    "apply_move",
    "is_base_case",
    "reduce",
    "unknot_certificate",
    "squared_link",
    "certificate_to_obj",
    "certificate_from_obj",
]


class Stuck(StarError):
    """A non-base star admitted no legal move.  Exhaustively falsified over
    all stars; raising it signals a bug."""


class NotSimple(StarError):
    """The face boundary segments failed to close into one simple polygon.
    Impossible for valid stars; defensive."""


@dataclass(frozen=True)
class Move:
    """Remove the adjacent faces F_{x,a}, F_{a,y}, add F_{x,y}."""

    removed: tuple[LocalFace, LocalFace]
    added: LocalFace

    def __post_init__(self):
        f1, f2 = self.removed
        if f1 > f2:
            object.__setattr__(self, "removed", (f2, f1))
        shared = set(f1) & set(f2)
        if len(shared) != 1:
            raise ValueError(f"{f1} and {f2} do not share exactly one axis")
        a = shared.pop()
        x = f1.u if f1.v == a else f1.v
        y = f2.u if f2.v == a else f2.v
        if self.added != LocalFace(x, y):
            raise ValueError(f"added face {self.added} is not F({x},{y})")

    @property
    def shared_axis(self) -> int:
        return (set(self.removed[0]) & set(self.removed[1])).pop()

    def sort_key(self):
        return (self.removed, self.added)


def is_base_case(s: Star) -> bool:
    """Terminal stars of the reduction: any triangle, or the planar
    four-face star (all faces in one plane)."""
    if s.n == 3:
        return True
    return s.n == 4 and len({f.plane for f in s.faces()}) == 1


def legal_moves(s: Star) -> list[Move]:
    """All contraction moves applicable to s, in canonical order.

    A cycle position ...x,a,y... yields a move iff |x| != |y| (the
    replacement face exists) and F_{x,y} is not already a face of s (the
    result stays a star).
    """
    c = s.cycle
    n = len(c)
    faces = s.face_set()
    moves = []
    for i in range(n):
        x, a, y = c[i - 1], c[i], c[(i + 1) % n]
        if abs(x) == abs(y):
            continue
        added = LocalFace(x, y)
        if added in faces:
            continue
        moves.append(Move((LocalFace(x, a), LocalFace(a, y)), added))
    moves.sort(key=Move.sort_key)
    return moves


def apply_move(s: Star, m: Move) -> Star:
    """The star after m; one face fewer, validity re-checked."""
    faces = set(s.face_set())
    if not set(m.removed) <= faces:
        raise ValueError(f"{m} does not apply to {s}")
    if m.added in faces:
        raise ValueError(f"{m} would duplicate {m.added}")
    faces -= set(m.removed)
    faces.add(m.added)
    return star_cycle(faces)


@dataclass(frozen=True)
class ReductionCertificate:
    """A witnessed contraction of start to a base-case terminal star.

    Each move is an ambient isotopy across a grid 3-cell, so the
    certificate shows the squared link of start is isotopic to the boundary
    of a planar square: unknotted.
    """

    start: Star
    moves: tuple[Move, ...]
    terminal: Star

    def __post_init__(self):
        if len(self.moves) != self.start.n - self.terminal.n:
            raise ValueError("move count does not match face count drop")
        if not is_base_case(self.terminal):
            raise ValueError(f"terminal {self.terminal} is not a base case")

    def replay(self) -> Star:
        """Re-apply the moves to start; returns (and checks) the terminal."""
        cur = self.start
        for m in self.moves:
            cur = apply_move(cur, m)
        if cur != self.terminal:
            raise ValueError("certificate replay does not reach the terminal")
        return cur


def reduce(s: Star) -> ReductionCertificate:
    """Contract s to a base case, always taking the least legal move.

    Deterministic; at most five moves (8 faces down to 3).  Raises Stuck if
    a non-base star has no legal move, which exhaustive checking shows
    never happens.
    """
    moves = []
    cur = s
    while not is_base_case(cur):
        options = legal_moves(cur)
        if not options:
            raise Stuck(f"no legal move on non-base star {cur}")
        m = options[0]
        moves.append(m)
        cur = apply_move(cur, m)
    return ReductionCertificate(s, tuple(moves), cur)


def unknot_certificate(s: Star) -> ReductionCertificate:
    """Alias of reduce(s), read as an unknottedness certificate for the
    squared link of s."""
    return reduce(s)


def _unit(a: int) -> tuple[int, int, int, int]:
    p = [0, 0, 0, 0]
    p[abs(a) - 1] = 1 if a > 0 else -1
    return tuple(p)


def _add(p, q) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(p, q))


@dataclass(frozen=True)
class SquaredLink:
    """The boundary polygon of a star: a simple closed walk through the
    points e_u and e_u + e_v, avoiding the central vertex.

    Stored as the cyclic sequence of polygon vertices; segments are the
    consecutive pairs.  A star of n faces yields 2n unit segments.
    """

    points: tuple[tuple[int, int, int, int], ...]

    @property
    def segments(self) -> tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]:
        pts = self.points
        return tuple((pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts)))

    def __len__(self) -> int:
        return len(self.points)


def squared_link(s: Star) -> SquaredLink:
    """The boundary of the star: each face F_{u,v} contributes its two
    sides [e_u, e_u+e_v] and [e_v, e_u+e_v] away from the vertex."""
    adj: dict[tuple, list[tuple]] = {}
    for f in s.faces():
        eu, ev = _unit(f.u), _unit(f.v)
        corner = _add(eu, ev)
        for p, q in ((eu, corner), (ev, corner)):
            adj.setdefault(p, []).append(q)
            adj.setdefault(q, []).append(p)

    for p, nb in adj.items():
        if len(nb) != 2 or p == (0, 0, 0, 0):
            raise NotSimple(f"point {p} lies on {len(nb)} segments")

    start = min(adj)
    walk = [start]
    prev, cur = None, start
    while True:
        nb = sorted(adj[cur])
        nxt = nb[0] if nb[0] != prev else nb[1]
        if nxt == start:
            break
        walk.append(nxt)
        prev, cur = cur, nxt
    if len(walk) != len(adj):
        raise NotSimple("boundary splits into several polygons")
    link = SquaredLink(tuple(walk))
    assert len(link) == 2 * s.n
    return link


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _move_to_obj(m: Move) -> dict:
    a = m.shared_axis
    f1, f2 = m.removed
    x = f1.u if f1.v == a else f1.v
    y = f2.u if f2.v == a else f2.v
    return {"remove": [[x, a], [a, y]], "add": [m.added.u, m.added.v]}


def certificate_to_obj(cert: ReductionCertificate) -> dict:
    return {
        "start": {"cycle": list(cert.start.cycle)},
        "moves": [_move_to_obj(m) for m in cert.moves],
        "terminal": {"cycle": list(cert.terminal.cycle)},
    }


def certificate_from_obj(obj: dict) -> ReductionCertificate:
    moves = []
    for mo in obj["moves"]:
        (x, a), (a2, y) = mo["remove"]
        if a != a2:
            raise ValueError(f"removed faces do not share an axis: {mo}")
        moves.append(Move((LocalFace(x, a), LocalFace(a, y)), LocalFace(*mo["add"])))
    return ReductionCertificate(
        Star(obj["start"]["cycle"]), tuple(moves), Star(obj["terminal"]["cycle"])
    )
