"""Vertex-star combinatorics: exhaustive enumeration, signatures,
canonical forms under the signed-permutation group, and the orbit
classification.

A star is a cycle in the graph on the eight signed axes with the four
antipodal edges removed.  Its *signature* records how many of its faces lie
in each of the six coordinate 2-planes; a plane holding two faces is scored
"2" when the pair shares a signed axis and "2b" (printed 2-bar) when the
pair is antipodal.  Classification is up to the symmetries of the grid
fixing the vertex: signed permutations of the four coordinates, a group of
order 384.

The exhaustive classification yields 23 orbits over 21 distinct
(size, signature) pairs; signature alone does not separate orbits in two
cases (see EXPECTED_CLASS_COUNTS).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .lattice import (
    SIGNED_AXES,
    LocalFace,
    Star,
    StarError,
    axis_key,
    star_cycle,
)

__all__ = [
    "Signature",
    "Symmetry",
    "StarClass",
    "InvalidRange",
    "ClassificationMismatch",
    "enumerate_stars",
    "signature",
    "all_symmetries",
    "canonicalize",
    "classify_all",
    "class_lookup",
    "check_lemmas",
    "LemmaReport",
    "REFERENCE_PATHS",
    "verify_reference_paths",
    "ReferenceCheck",
    "star_to_obj",
    "star_from_obj",
    "class_to_obj",
]


class InvalidRange(ValueError):
    """Requested star sizes outside 3 <= n_min <= n_max <= 8."""


class ClassificationMismatch(RuntimeError):
    """The computed orbit partition disagrees with the known 20-class table;
    indicates an implementation bug."""


# Signature symbols in descending significance.  "2b" is the antipodal pair.
_SYMBOLS = ("4", "3", "2", "2b", "1")
_RANK = {s: i for i, s in enumerate(_SYMBOLS)}
_VALUE = {"4": 4, "3": 3, "2": 2, "2b": 2, "1": 1}


@dataclass(frozen=True)
class Signature:
    """Sorted multiset over {4, 3, 2, 2b, 1} counting coplanar faces."""

    entries: tuple[str, ...]

    def __init__(self, entries: Iterable[str]):
        ent = tuple(entries)
        for e in ent:
            if e not in _RANK:
                raise ValueError(f"bad signature symbol {e!r}")
        ent = tuple(sorted(ent, key=_RANK.__getitem__))
        object.__setattr__(self, "entries", ent)

    @property
    def total(self) -> int:
        """Numeric sum; equals the face count of any star with this signature."""
        return sum(_VALUE[e] for e in self.entries)

    def sort_key(self) -> tuple[int, ...]:
        return tuple(_RANK[e] for e in self.entries)

    def count(self, symbol: str) -> int:
        return self.entries.count(symbol)

    def __str__(self) -> str:
        return "(" + ",".join(self.entries) + ")"

    def __repr__(self) -> str:
        return f"Signature{str(self)}"


def signature(s: Star) -> Signature:
    """Group the faces of s by coordinate 2-plane and score each plane."""
    by_plane: dict[tuple[int, int], list[LocalFace]] = {}
    for f in s.faces():
        by_plane.setdefault(f.plane, []).append(f)
    entries = []
    for faces in by_plane.values():
        k = len(faces)
        if k == 1:
            entries.append("1")
        elif k == 2:
            a, b = faces
            entries.append("2b" if b == a.antipodal else "2")
        elif k == 3:
            entries.append("3")
        elif k == 4:
            entries.append("4")
        else:  # pragma: no cover - impossible, a plane has only 4 faces
            raise StarError(f"{k} faces in one plane")
    return Signature(entries)


@dataclass(frozen=True)
class Symmetry:
    """A signed permutation of the four coordinate axes.

    Acts on a signed axis a by sending it to signs[p-1] * sgn(a) * p where
    p = perm[|a|-1]; as a linear map it sends e_i to signs[perm(i)-1] *
    e_perm(i).  These 384 maps are the symmetries of the grid fixing the
    origin (rotations and reflections of the 4-cube).
    """

    perm: tuple[int, int, int, int]
    signs: tuple[int, int, int, int]

    def __post_init__(self):
        if sorted(self.perm) != [1, 2, 3, 4]:
            raise ValueError(f"perm must rearrange 1..4, got {self.perm}")
        if any(s not in (-1, 1) for s in self.signs):
            raise ValueError(f"signs must be +-1, got {self.signs}")

    @classmethod
    def identity(cls) -> "Symmetry":
        return cls((1, 2, 3, 4), (1, 1, 1, 1))

    def apply_axis(self, a: int) -> int:
        p = self.perm[abs(a) - 1]
        s = self.signs[p - 1]
        return s * p if a > 0 else -s * p

    def apply_star(self, s: Star) -> Star:
        return Star(self.apply_axis(a) for a in s.cycle)

    def apply_face(self, f: LocalFace) -> LocalFace:
        return LocalFace(self.apply_axis(f.u), self.apply_axis(f.v))

    def compose(self, other: "Symmetry") -> "Symmetry":
        """self after other: (self.compose(other)).apply_axis(a) ==
        self.apply_axis(other.apply_axis(a))."""
        perm = tuple(self.perm[other.perm[i] - 1] for i in range(4))
        signs = []
        for i in range(4):
            # image of e_{i+1} under other then self
            q = other.perm[i]
            s1 = other.signs[q - 1]
            p = self.perm[q - 1]
            s2 = self.signs[p - 1]
            signs.append(s1 * s2)
        # reindex: signs above is indexed by target axis of the composite
        out_signs = [1, 1, 1, 1]
        for i in range(4):
            out_signs[perm[i] - 1] = signs[i]
        return Symmetry(tuple(perm), tuple(out_signs))

    def inverse(self) -> "Symmetry":
        inv_perm = [0, 0, 0, 0]
        inv_signs = [1, 1, 1, 1]
        for i in range(4):
            p = self.perm[i]
            inv_perm[p - 1] = i + 1
            inv_signs[i] = self.signs[p - 1]
        return Symmetry(tuple(inv_perm), tuple(inv_signs))

    def matrix(self) -> tuple[tuple[int, ...], ...]:
        """Rows of the 4x4 signed permutation matrix (maps column vectors)."""
        m = [[0] * 4 for _ in range(4)]
        for i in range(4):
            p = self.perm[i]
            m[p - 1][i] = self.signs[p - 1]
        return tuple(tuple(r) for r in m)


@lru_cache(maxsize=1)
def all_symmetries() -> tuple[Symmetry, ...]:
    """All 384 signed permutations, in a fixed deterministic order."""
    out = []
    for perm in itertools.permutations((1, 2, 3, 4)):
        for signs in itertools.product((1, -1), repeat=4):
            out.append(Symmetry(perm, signs))
    return tuple(out)


def enumerate_stars(n_min: int = 3, n_max: int = 8) -> set[Star]:
    """Every star with n_min..n_max faces: all cycles (up to rotation and
    reflection of the sequence, not of axis labels) in the graph on the
    eight signed axes minus the four antipodal edges."""
    if not (3 <= n_min <= n_max <= 8):
        raise InvalidRange(f"need 3 <= n_min <= n_max <= 8, got {n_min}..{n_max}")
    order = sorted(SIGNED_AXES, key=axis_key)
    index = {a: i for i, a in enumerate(order)}
    out: set[Star] = set()

    def grow(path: list[int], used: set[int]):
        last = path[-1]
        if len(path) >= n_min and abs(last) != abs(path[0]):
            if index[path[1]] < index[last]:
                out.add(Star(path))
        if len(path) == n_max:
            return
        for b in order[index[path[0]] + 1 :]:
            if b not in used and abs(b) != abs(last):
                path.append(b)
                used.add(b)
                grow(path, used)
                used.discard(b)
                path.pop()

    for start in order:
        grow([start], {start})
    return out


def canonicalize(s: Star) -> tuple[Star, Symmetry]:
    """The least star in the symmetry orbit of s, with one symmetry g such
    that g applied to s gives that representative."""
    best: tuple[tuple, Star, Symmetry] | None = None
    for g in all_symmetries():
        img = g.apply_star(s)
        key = img.sort_key()
        if best is None or key < best[0]:
            best = (key, img, g)
    assert best is not None
    return best[1], best[2]


@dataclass(frozen=True)
class StarClass:
    """One symmetry orbit of stars."""

    id: int
    representative: Star
    signature: Signature
    orbit_size: int

    @property
    def n(self) -> int:
        return self.representative.n


# Orbit counts per star size, established by exhaustive enumeration here and
# cross-checked in the test suite by an independent brute-force oracle
# (subset/permutation enumeration plus union-find under group generators).
# Note: 23 orbits over 21 distinct (size, signature) pairs.  Signature does
# not determine the orbit: (2,2,2b) at n=6 and (2b,2b,1,1,1,1) at n=8 each
# split into a pair of orbits (one spanning three coordinate directions, one
# spanning all four).
EXPECTED_CLASS_COUNTS = {3: 1, 4: 3, 5: 2, 6: 6, 7: 4, 8: 7}
EXPECTED_TOTAL_CLASSES = 23

#: Labeled star counts per size (all cycles, before orbit identification).
EXPECTED_STAR_COUNTS = {3: 32, 4: 102, 5: 288, 6: 640, 7: 960, 8: 744}


@lru_cache(maxsize=1)
def _classify_all_cached() -> tuple[StarClass, ...]:
    stars = sorted(enumerate_stars(), key=Star.sort_key)
    seen: set[Star] = set()
    raw: list[tuple[Star, int]] = []
    for s in stars:
        if s in seen:
            continue
        orbit = {g.apply_star(s) for g in all_symmetries()}
        seen |= orbit
        raw.append((min(orbit, key=Star.sort_key), len(orbit)))

    raw.sort(key=lambda t: (t[0].n, signature(t[0]).sort_key(), t[0].sort_key()))
    classes = tuple(
        StarClass(i + 1, rep, signature(rep), size)
        for i, (rep, size) in enumerate(raw)
    )

    counts: dict[int, int] = {}
    for c in classes:
        counts[c.n] = counts.get(c.n, 0) + 1
    if len(classes) != EXPECTED_TOTAL_CLASSES or counts != EXPECTED_CLASS_COUNTS:
        raise ClassificationMismatch(
            f"got {len(classes)} orbits with per-size counts {counts}, "
            f"expected {EXPECTED_TOTAL_CLASSES} with {EXPECTED_CLASS_COUNTS}"
        )
    if sum(c.orbit_size for c in classes) != len(stars):
        raise ClassificationMismatch("orbit sizes do not partition the star set")
    return classes


def classify_all() -> list[StarClass]:
    """All star orbits, sorted by (size, signature) and numbered from 1.

    Raises ClassificationMismatch if the partition disagrees with the
    verified class table (a regression guard; see EXPECTED_CLASS_COUNTS).
    """
    return list(_classify_all_cached())


def class_lookup() -> dict[Star, StarClass]:
    """Map from canonical orbit representative to its class."""
    return {c.representative: c for c in classify_all()}


def class_of(s: Star) -> StarClass:
    """The class of an arbitrary labeled star."""
    rep, _ = canonicalize(s)
    return class_lookup()[rep]


# ---------------------------------------------------------------------------
# Lemma suite
# ---------------------------------------------------------------------------

#: Signatures allowed to contain a 3.
THREE_SIGNATURES = frozenset(
    Signature(e) for e in [("3", "1", "1"), ("3", "1", "1", "1"),
                           ("3", "2", "1", "1"), ("3", "3", "1", "1")]
)

#: Signatures with at least one 2/2b, no 3, for stars of at most 7 faces.
TWO_SIGNATURES = frozenset(
    Signature(e)
    for e in [
        ("2", "2"),
        ("2", "1", "1", "1"),
        ("2", "2", "2b"),
        ("2b", "2b", "2b"),
        ("2", "2", "1", "1", "1"),
        ("2", "2b", "1", "1", "1"),
        ("2", "1", "1", "1", "1"),
        ("2b", "1", "1", "1", "1"),
    ]
)


@dataclass
class LemmaReport:
    """Outcome of the exhaustive signature checks over all stars."""

    total_stars: int
    stars_per_n: dict[int, int]
    five_singles: list[Star] = field(default_factory=list)
    bad_three: list[tuple[Star, Signature]] = field(default_factory=list)
    bad_two: list[tuple[Star, Signature]] = field(default_factory=list)
    unrealized_two: list[Signature] = field(default_factory=list)
    forbidden_triple_two: list[tuple[Star, Signature]] = field(default_factory=list)
    signature_collisions: list[tuple[Signature, list[int]]] = field(default_factory=list)

    @property
    def no_five_singles_ok(self) -> bool:
        return not self.five_singles

    @property
    def three_signatures_ok(self) -> bool:
        return not self.bad_three

    @property
    def two_signatures_ok(self) -> bool:
        return not self.bad_two and not self.unrealized_two

    @property
    def signature_determines_class(self) -> bool:
        return not self.signature_collisions

    @property
    def passed(self) -> bool:
        return (
            self.no_five_singles_ok
            and self.three_signatures_ok
            and self.two_signatures_ok
            and not self.forbidden_triple_two
        )


def check_lemmas() -> LemmaReport:
    """Exhaustively verify the signature restrictions over all stars:

    (a) no signature has five (or more) single faces in distinct planes;
    (b) every signature containing a 3 is one of the four allowed;
    (c) every signature with a 2/2b and no 3 on at most 7 faces is in the
        known list of eight, and all eight occur;
    plus: no signature is three 2/2b entries with one or two 1s, and
    whether (size, signature) determines the orbit.
    """
    stars = enumerate_stars()
    per_n: dict[int, int] = {}
    report = LemmaReport(total_stars=len(stars), stars_per_n=per_n)
    seen_two: set[Signature] = set()

    for s in sorted(stars, key=Star.sort_key):
        per_n[s.n] = per_n.get(s.n, 0) + 1
        sig = signature(s)
        if sig.count("1") >= 5:
            report.five_singles.append(s)
        if sig.count("3") > 0 and sig not in THREE_SIGNATURES:
            report.bad_three.append((s, sig))
        twos = sig.count("2") + sig.count("2b")
        if sig.count("3") == 0 and twos > 0 and s.n <= 7:
            if sig not in TWO_SIGNATURES:
                report.bad_two.append((s, sig))
            else:
                seen_two.add(sig)
        if twos == 3 and sig.count("1") in (1, 2) and len(sig.entries) == twos + sig.count("1"):
            report.forbidden_triple_two.append((s, sig))

    report.unrealized_two = sorted(TWO_SIGNATURES - seen_two, key=Signature.sort_key)

    by_sig: dict[tuple[int, tuple[int, ...]], list[int]] = {}
    for c in classify_all():
        by_sig.setdefault((c.n, c.signature.sort_key()), []).append(c.id)
    for (n, _), ids in sorted(by_sig.items()):
        if len(ids) > 1:
            sig = classify_all()[ids[0] - 1].signature
            report.signature_collisions.append((sig, ids))
    return report


# ---------------------------------------------------------------------------
# Reference cross-check table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReferenceEntry:
    n: int
    signature: Signature
    faces: tuple[tuple[int, int], ...]


def _ref(n: int, sig: Sequence[str], *faces: tuple[int, int]) -> ReferenceEntry:
    return ReferenceEntry(n, Signature(sig), tuple(faces))


#: Cross-check corpus: twenty labeled representative face lists, one per
#: (size, signature) row of the classical 20-class table.  The lists are
#: kept verbatim, including two faulty entries (one repeats a face, one
#: gives an axis three faces); the verifier flags those and only suggests a
#: nearest valid star, it never repairs the table.
REFERENCE_PATHS: tuple[ReferenceEntry, ...] = (
    _ref(3, ("1", "1", "1"), (1, 2), (1, 3), (2, 3)),
    _ref(4, ("4",), (1, 2), (1, -2), (-1, 2), (-1, -2)),
    _ref(4, ("2", "2"), (1, 2), (1, -2), (2, 3), (-2, 3)),
    _ref(4, ("1", "1", "1", "1"), (1, 2), (2, 3), (3, 4), (1, 4)),
    _ref(5, ("3", "1", "1"), (1, 2), (-1, 2), (-1, 3), (-2, 3), (1, -2)),
    _ref(5, ("2", "1", "1", "1"), (1, 2), (-1, 2), (1, 3), (3, 4), (-1, 4)),
    _ref(6, ("3", "1", "1", "1"), (1, 2), (-1, 2), (-1, 3), (-2, 4), (3, 4), (1, -2)),
    _ref(6, ("2", "1", "1", "1", "1"), (1, 2), (-1, 2), (-1, 3), (-2, 3), (-2, 4), (1, 4)),
    _ref(6, ("2b", "1", "1", "1", "1"), (1, 2), (-1, -2), (1, 3), (-2, 3), (2, 4), (1, 4)),
    _ref(6, ("2", "2", "2b"), (1, 2), (-1, 2), (1, 3), (-1, -3), (-2, 3), (-2, 3)),
    _ref(6, ("2b", "2b", "2b"), (1, 2), (-1, -2), (1, 3), (-2, 3), (2, -3), (-1, -3)),
    _ref(7, ("3", "2", "1", "1"), (1, 2), (-1, 2), (-1, 4), (3, -4), (3, 4), (-2, -4), (1, -2)),
    _ref(7, ("2", "2", "1", "1", "1"), (1, 2), (-1, 2), (-1, 4), (3, 4), (-2, 3), (-2, -3), (1, -3)),
    _ref(7, ("2", "2b", "1", "1", "1"), (1, 2), (-1, 2), (1, -3), (-1, 3), (-2, 3), (-2, 4), (-3, 4)),
    _ref(7, ("2b", "2b", "1", "1", "1"), (1, 2), (-1, -2), (1, -3), (-1, 3), (-2, -3), (2, 4), (3, 4)),
    _ref(8, ("3", "3", "1", "1"), (1, 2), (-1, 2), (-1, 4), (3, -4), (3, 4), (-3, -4), (-2, -3), (1, -2)),
    _ref(8, ("2", "2", "1", "1", "1", "1"), (1, 2), (2, -4), (-1, 4), (-1, -4), (3, 4), (-2, 3), (-2, -3), (1, -3)),
    _ref(8, ("2", "2b", "1", "1", "1", "1"), (1, -4), (2, -4), (-1, 2), (-1, 4), (3, 4), (-2, 3), (-2, -3), (1, -3)),
    _ref(8, ("2", "2", "2b", "2b"), (1, 2), (-1, 2), (-1, 4), (3, 4), (-2, 3), (-2, -3), (1, -4), (-3, -4)),
    _ref(8, ("2b", "2b", "2b", "2b"), (1, 2), (-1, -2), (1, 3), (-1, -3), (2, 4), (-3, 4), (-2, -4), (3, -4)),
)


@dataclass
class ReferenceCheck:
    """Verification outcome for one reference table entry."""

    entry: ReferenceEntry
    star: Star | None
    class_id: int | None
    error: str | None
    signature_matches: bool
    suggestion: tuple[tuple[int, int], ...] | None

    @property
    def ok(self) -> bool:
        return self.error is None and self.signature_matches


def _nearest_star(n: int, sig: Signature, printed: set[LocalFace]) -> Star | None:
    """The star of the given size and signature whose face set differs least
    from the printed one; deterministic tie-break."""
    best: tuple[int, tuple, Star] | None = None
    for s in enumerate_stars(n, n):
        if signature(s) != sig:
            continue
        d = len(s.face_set() ^ printed)
        key = (d, s.sort_key(), s)
        if best is None or key[:2] < best[:2]:
            best = key
    return best[2] if best else None


def verify_reference_paths() -> list[ReferenceCheck]:
    """Run every reference entry through star assembly and classification.

    Valid entries report their class; entries that fail to assemble, or
    assemble to a different signature, are flagged with the exact fault and
    a nearest-valid-star suggestion.
    """
    lookup = class_lookup()
    out = []
    for entry in REFERENCE_PATHS:
        star = None
        class_id = None
        error = None
        sig_ok = False
        suggestion = None
        faces = {LocalFace(*f) for f in entry.faces}
        if len(faces) != len(entry.faces):
            error = f"lists {len(entry.faces)} faces but only {len(faces)} are distinct"
        else:
            try:
                star = star_cycle(faces)
            except StarError as exc:
                error = str(exc)
        if star is not None:
            sig_ok = signature(star) == entry.signature
            rep, _ = canonicalize(star)
            class_id = lookup[rep].id
            if not sig_ok:
                error = f"assembles with signature {signature(star)}, labeled {entry.signature}"
        if error is not None:
            near = _nearest_star(entry.n, entry.signature, faces)
            if near is not None:
                suggestion = tuple((f.u, f.v) for f in sorted(near.faces()))
        out.append(ReferenceCheck(entry, star, class_id, error, sig_ok, suggestion))
    return out


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def star_to_obj(s: Star) -> dict:
    return {"cycle": list(s.cycle)}


def star_from_obj(obj: dict) -> Star:
    return Star(obj["cycle"])


def class_to_obj(c: StarClass) -> dict:
    return {
        "id": c.id,
        "n": c.n,
        "signature": list(c.signature.entries),
        "representative": list(c.representative.cycle),
        "orbit_size": c.orbit_size,
    }
