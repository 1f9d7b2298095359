"""Integer-grid geometry in R^4: signed axes, unit 2-faces, edges, and the
local star of a vertex.

Conventions
-----------
A *signed axis* is an integer in {-4,...,-1,1,...,4} naming one of the eight
unit directions +-e1..+-e4.  A global 2-face of the grid is stored with an
integer base point and two distinct positive axis indices; the signed local
form F_{u,v} of a face relative to one of its corners records the directions
of the two face edges leaving that corner.

The faces meeting at a vertex are modelled as edges of the complete graph on
the eight signed axes with the four antipodal edges removed; a vertex of a
closed surface sees a single cycle in that graph (its star).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

AXES = (1, 2, 3, 4)
SIGNED_AXES = (1, -1, 2, -2, 3, -3, 4, -4)

#: The six coordinate 2-planes, as sorted pairs of positive axis indices.
PLANE_CLASSES = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))


class StarError(ValueError):
    """Base class for errors raised while assembling a vertex star."""


class AntipodalFace(StarError):
    """A face F_{u,v} with |u| = |v| was supplied; no such face exists."""


class DegreeViolation(StarError):
    """Some signed axis meets a number of faces different from 2."""

    def __init__(self, degrees: dict[int, int]):
        self.degrees = dict(degrees)
        bad = ", ".join(f"axis {a}: degree {d}" for a, d in sorted(degrees.items()))
        super().__init__(f"vertex star is not a manifold point ({bad})")


class Disconnected(StarError):
    """The faces at the vertex form two or more cycles (a pinch point)."""


def is_signed_axis(a: int) -> bool:
    return isinstance(a, int) and a != 0 and 1 <= abs(a) <= 4


def antipode(a: int) -> int:
    """The opposite signed axis, antipode(antipode(a)) == a."""
    return -a


def axis_key(a: int) -> tuple[int, int]:
    """Total order on signed axes: 1 < -1 < 2 < -2 < 3 < -3 < 4 < -4."""
    return (abs(a), 0 if a > 0 else 1)


def _check_axis(a: int) -> int:
    if not is_signed_axis(a):
        raise ValueError(f"{a!r} is not a signed axis (expected +-1..+-4)")
    return a


@dataclass(frozen=True, order=True)
class LocalFace:
    """A face F_{u,v} seen from a vertex: the unordered pair of signed axes
    spanned by its two edges at that vertex.  Stored with u before v in the
    axis order, so LocalFace(u, v) == LocalFace(v, u)."""

    u: int
    v: int

    def __init__(self, u: int, v: int):
        _check_axis(u)
        _check_axis(v)
        if abs(u) == abs(v):
            raise AntipodalFace(f"no face joins {u} and {v}")
        if axis_key(u) > axis_key(v):
            u, v = v, u
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def plane(self) -> tuple[int, int]:
        """The coordinate 2-plane {|u|, |v|} containing the face."""
        i, j = abs(self.u), abs(self.v)
        return (i, j) if i < j else (j, i)

    @property
    def antipodal(self) -> "LocalFace":
        """The face F_{-u,-v}, diagonally opposite in the same plane."""
        return LocalFace(-self.u, -self.v)

    def __iter__(self) -> Iterator[int]:
        return iter((self.u, self.v))

    def __repr__(self) -> str:
        return f"F({self.u},{self.v})"


def canonical_cycle(cycle: Iterable[int]) -> tuple[int, ...]:
    """Least rotation/reflection of a cycle of signed axes under axis_key.

    The result is a normal form for the dihedral class of the sequence, so
    two cycles are the same star iff their canonical forms are equal.
    """
    seq = tuple(cycle)
    n = len(seq)
    best = None
    for direction in (seq, seq[::-1]):
        for r in range(n):
            cand = direction[r:] + direction[:r]
            key = tuple(axis_key(a) for a in cand)
            if best is None or key < best[0]:
                best = (key, cand)
    assert best is not None
    return best[1]


@dataclass(frozen=True)
class Star:
    """A vertex star: a single cycle of 3..8 distinct signed axes whose
    consecutive pairs (wrapping) are the faces at the vertex.

    The cycle is stored in canonical rotation/reflection, so equality of
    stars is plain field equality.
    """

    cycle: tuple[int, ...]

    def __init__(self, cycle: Iterable[int]):
        seq = tuple(cycle)
        if not 3 <= len(seq) <= 8:
            raise StarError(f"a star has 3..8 faces, got {len(seq)}")
        for a in seq:
            _check_axis(a)
        if len(set(seq)) != len(seq):
            raise StarError(f"cycle revisits an axis: {seq}")
        for a, b in zip(seq, seq[1:] + seq[:1]):
            if abs(a) == abs(b):
                raise AntipodalFace(f"cycle joins {a} and {b}: no such face")
        object.__setattr__(self, "cycle", canonical_cycle(seq))

    @property
    def n(self) -> int:
        """Number of faces (equals the cycle length)."""
        return len(self.cycle)

    def faces(self) -> tuple[LocalFace, ...]:
        c = self.cycle
        return tuple(LocalFace(c[i], c[(i + 1) % len(c)]) for i in range(len(c)))

    def face_set(self) -> frozenset[LocalFace]:
        return frozenset(self.faces())

    def neighbors(self, a: int) -> tuple[int, int]:
        """The two axes adjacent to a in the cycle (the other corners of the
        two faces at the edge e_a)."""
        c = self.cycle
        i = c.index(a)
        return (c[i - 1], c[(i + 1) % len(c)])

    def sort_key(self) -> tuple[tuple[int, int], ...]:
        return tuple(axis_key(a) for a in self.cycle)

    def __repr__(self) -> str:
        return f"Star({','.join(map(str, self.cycle))})"


@dataclass(frozen=True, order=True)
class GridFace:
    """A unit 2-face of the integer grid: base lattice point plus two
    distinct positive axis indices.  Corners are base, base+ei, base+ej,
    base+ei+ej."""

    base: tuple[int, int, int, int]
    axes: tuple[int, int]

    def __init__(self, base: Iterable[int], axes: Iterable[int]):
        base = tuple(int(x) for x in base)
        ax = tuple(sorted(int(a) for a in axes))
        if len(base) != 4:
            raise ValueError(f"base must be a 4-tuple, got {base}")
        if len(ax) != 2 or ax[0] == ax[1] or not all(1 <= a <= 4 for a in ax):
            raise ValueError(f"axes must be two distinct indices in 1..4, got {ax}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "axes", ax)

    def corners(self) -> tuple[tuple[int, ...], ...]:
        i, j = self.axes
        b = self.base
        return (b, _shift(b, i), _shift(b, j), _shift(_shift(b, i), j))

    def local_face_at(self, v: tuple[int, ...]) -> LocalFace | None:
        """The signed local form of this face relative to corner v, or None
        if v is not a corner."""
        i, j = self.axes
        b = self.base
        di = v[i - 1] - b[i - 1]
        dj = v[j - 1] - b[j - 1]
        if di not in (0, 1) or dj not in (0, 1):
            return None
        for k in range(4):
            if k not in (i - 1, j - 1) and v[k] != b[k]:
                return None
        u = i if di == 0 else -i
        w = j if dj == 0 else -j
        return LocalFace(u, w)


@dataclass(frozen=True, order=True)
class GridEdge:
    """A unit edge of the grid: base lattice point plus the positive axis it
    runs along."""

    base: tuple[int, int, int, int]
    axis: int

    def __init__(self, base: Iterable[int], axis: int):
        base = tuple(int(x) for x in base)
        if len(base) != 4:
            raise ValueError(f"base must be a 4-tuple, got {base}")
        if not 1 <= axis <= 4:
            raise ValueError(f"axis must be in 1..4, got {axis}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "axis", int(axis))

    def endpoints(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (self.base, _shift(self.base, self.axis))


def _shift(p: tuple[int, ...], axis: int, d: int = 1) -> tuple[int, ...]:
    q = list(p)
    q[axis - 1] += d
    return tuple(q)


def edges_of_face(f: GridFace) -> set[GridEdge]:
    """The four boundary edges of the unit square f."""
    i, j = f.axes
    b = f.base
    return {
        GridEdge(b, i),
        GridEdge(b, j),
        GridEdge(_shift(b, j), i),
        GridEdge(_shift(b, i), j),
    }


def local_faces_at(v: Iterable[int], faces: Iterable[GridFace]) -> set[LocalFace]:
    """The signed local forms, relative to v, of every face having v as a
    corner.  Empty if v lies on no face."""
    v = tuple(int(x) for x in v)
    out = set()
    for f in faces:
        lf = f.local_face_at(v)
        if lf is not None:
            out.add(lf)
    return out


def star_cycle(local: Iterable[LocalFace | tuple[int, int]]) -> Star:
    """Assemble a set of local faces into the vertex star cycle.

    Each face F_{u,v} is an edge joining u and v in the graph on the eight
    signed axes.  Succeeds iff every touched axis has degree exactly 2 and
    the edges form one single cycle.

    Raises DegreeViolation if some axis meets != 2 faces (not a manifold
    point), Disconnected if the faces split into several cycles (a pinch
    point), AntipodalFace if some input pair has |u| = |v|.
    """
    faces = set()
    for f in local:
        faces.add(f if isinstance(f, LocalFace) else LocalFace(*f))
    if not faces:
        raise DegreeViolation({})

    adj: dict[int, list[int]] = {}
    for f in faces:
        adj.setdefault(f.u, []).append(f.v)
        adj.setdefault(f.v, []).append(f.u)
    bad = {a: len(nb) for a, nb in adj.items() if len(nb) != 2}
    if bad:
        raise DegreeViolation(bad)

    start = min(adj, key=axis_key)
    cycle = [start]
    prev, cur = None, start
    while True:
        nb = adj[cur]
        nxt = nb[0] if nb[1] == prev else nb[1] if nb[0] == prev else nb[0]
        if nxt == start:
            break
        cycle.append(nxt)
        prev, cur = cur, nxt
    if len(cycle) != len(adj):
        raise Disconnected(
            f"faces split into several cycles ({len(cycle)} of {len(adj)} axes reached)"
        )
    return Star(cycle)
