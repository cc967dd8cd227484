"""Exact rational polyhedral kernel.

Convex polyhedra are carried in two interchangeable representations:

* an H-representation, a list of halfspaces ``a.x >= b`` (equalities appear
  as paired inequalities), and
* a V-representation, generator lists ``conv(vertices) + cone(rays)``.

A single conversion algorithm, the double description method run on the
homogenisation cone, translates between the two; it is also what prunes
redundancy, so every canonicalised polyhedron has irredundant facets and
generator lists in a reproducible lexicographic order.  All arithmetic is
exact (gmpy2 rationals); there is no floating point anywhere in this module.

Unbounded sets are first class: recession rays are carried explicitly, and a
polyhedron that contains lines gets them as opposite ray pairs.  Cones are
ordinary polyhedra whose only vertex is the origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lp import EQ, OPTIMAL, LinearProgram
from .rationals import (
    ONE,
    ZERO,
    dot,
    is_zero_vector,
    primitive,
    rat,
    rat_vector,
    unit,
    vec_add,
    vec_neg,
    vec_scale,
    vec_sub,
    zeros,
)


class GeometryError(ValueError):
    pass


class ResourceCapError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Double description core
# ---------------------------------------------------------------------------

def dd_cone(rows, n):
    """Generators of the cone {x in R^n : r.x >= 0 for every r in rows}.

    Returns (lineality_basis, rays).  The rays are extreme modulo the
    lineality space; both lists are in primitive integer form.

    Incremental insertion: while a new constraint cuts the current lineality
    space, one lineality direction is rotated out into an explicit ray;
    otherwise the classic plus/zero/minus step applies, with the
    combinatorial adjacency test keeping the ray list minimal.
    """
    lin = [unit(n, i) for i in range(n)]
    rays = []  # entries [vector, tight-bitmask]
    nrows = 0
    for a in rows:
        if is_zero_vector(a):
            continue
        bit = 1 << nrows
        nrows += 1
        pivot = next((b for b in lin if dot(a, b)), None)
        if pivot is not None:
            ap = dot(a, pivot)
            new_lin = []
            for b in lin:
                if b is pivot:
                    continue
                ab = dot(a, b)
                new_lin.append(primitive(vec_sub(b, vec_scale(ab / ap, pivot))) if ab else b)
            lin = new_lin
            new_rays = []
            for v, tight in rays:
                av = dot(a, v)
                w = primitive(vec_sub(v, vec_scale(av / ap, pivot))) if av else v
                new_rays.append([w, tight | bit])
            star = pivot if ap > 0 else vec_neg(pivot)
            # the pivot lay in every previously inserted hyperplane
            new_rays.append([primitive(star), bit - 1])
            rays = new_rays
            continue
        plus, zero, minus = [], [], []
        for v, tight in rays:
            av = dot(a, v)
            if av > 0:
                plus.append([v, tight, av])
            elif av < 0:
                minus.append([v, tight, av])
            else:
                zero.append([v, tight | bit])
        if not minus:
            rays = [[v, t] for v, t, _ in plus] + zero
            continue
        combos = []
        for vp, tp, ap_ in plus:
            for vm, tm, am in minus:
                t = tp & tm
                if not _adjacent(rays, t, vp, vm):
                    continue
                w = primitive(vec_sub(vec_scale(ap_, vm), vec_scale(am, vp)))
                combos.append([w, t | bit])
        rays = [[v, t] for v, t, _ in plus] + zero + combos
    return lin, [v for v, _ in rays]


def _adjacent(rays, t, vp, vm) -> bool:
    for v, tight in rays:
        if v is vp or v is vm:
            continue
        if tight & t == t:
            return False
    return True


# ---------------------------------------------------------------------------
# Conversions (homogenisation + double description both ways)
# ---------------------------------------------------------------------------

def _generators_from_hrep(dim, hrep):
    """Minimal (vertices, rays) of {x : a.x >= b}; ((), ()) when empty."""
    rows = [(ONE,) + zeros(dim)]  # homogenisation coordinate x0 >= 0
    rows += [(-b,) + tuple(a) for a, b in hrep]
    lin, rays = dd_cone(rows, dim + 1)
    verts, recs = [], []
    for g in rays + lin + [vec_neg(l) for l in lin]:
        if g[0] > 0:
            verts.append(tuple(c / g[0] for c in g[1:]))
        elif g[0] == 0 and not is_zero_vector(g[1:]):
            recs.append(primitive(g[1:]))
    if not verts:
        return (), ()
    return tuple(sorted(set(verts))), tuple(sorted(set(recs)))


def _hrep_from_generators(dim, vertices, rays):
    """Irredundant facet list of conv(vertices) + cone(rays).

    Facets are the extreme rays of the polar of the homogenisation cone;
    lineality directions of the polar are implicit equalities and come back
    as paired inequalities.
    """
    rows = [(ONE,) + tuple(v) for v in vertices]
    rows += [(ZERO,) + tuple(r) for r in rays]
    lin, polar_rays = dd_cone(rows, dim + 1)
    ineqs = set()
    for g in polar_rays:
        if not is_zero_vector(g[1:]):
            ineqs.add((tuple(g[1:]), -g[0]))
    for g in lin:
        if not is_zero_vector(g[1:]):
            ineqs.add((tuple(g[1:]), -g[0]))
            h = vec_neg(g)
            ineqs.add((tuple(h[1:]), -h[0]))
    return tuple(sorted(ineqs))


# ---------------------------------------------------------------------------
# Polyhedron
# ---------------------------------------------------------------------------

NONEMPTY, EMPTY, UNKNOWN = "nonempty", "empty", "unknown"


@dataclass(frozen=True)
class Polyhedron:
    """Immutable convex polyhedron with lazily completed dual representations.

    Instances are safe to share read-only across workers: the lazy caches
    fill in idempotently and all operations return new objects.
    """

    dim: int
    _hrep: tuple = None  # tuple of (normal vector, offset): normal.x >= offset
    _vrep: tuple = None  # (vertices, rays)
    _state: dict = field(default_factory=dict, repr=False, compare=False)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_hrep(dim: int, rows) -> "Polyhedron":
        hrep = tuple((rat_vector(a), rat(b)) for a, b in rows)
        for a, _ in hrep:
            if len(a) != dim:
                raise GeometryError("halfspace dimension mismatch")
        return Polyhedron(dim, _hrep=hrep)

    @staticmethod
    def from_generators(dim: int, vertices, rays=()) -> "Polyhedron":
        vs = tuple(rat_vector(v) for v in vertices)
        rs = tuple(rat_vector(r) for r in rays)
        if not vs:
            raise GeometryError("a V-representation needs at least one vertex")
        for x in vs + rs:
            if len(x) != dim:
                raise GeometryError("generator dimension mismatch")
        for r in rs:
            if is_zero_vector(r):
                raise GeometryError("zero vector is not a ray")
        return Polyhedron(dim, _vrep=(vs, rs))

    @staticmethod
    def full_space(dim: int) -> "Polyhedron":
        return Polyhedron.from_hrep(dim, [])

    @staticmethod
    def empty(dim: int) -> "Polyhedron":
        e = unit(dim, 0)
        p = Polyhedron.from_hrep(dim, [(e, ONE), (vec_neg(e), ZERO)])
        p._state["emptiness"] = EMPTY
        p._state["vrep"] = ((), ())
        return p

    @staticmethod
    def cone_from_rays(dim: int, rays) -> "Polyhedron":
        return Polyhedron.from_generators(dim, [zeros(dim)], rays)

    # -- representation access --------------------------------------------

    @property
    def emptiness(self) -> str:
        if "emptiness" in self._state:
            return self._state["emptiness"]
        return NONEMPTY if self._vrep is not None else UNKNOWN

    def is_empty(self) -> bool:
        if self.emptiness == UNKNOWN:
            self.vrep()
        return self._state.get("emptiness", NONEMPTY) == EMPTY

    def hrep(self) -> tuple:
        if self._hrep is not None:
            return self._hrep
        cached = self._state.get("hrep")
        if cached is None:
            cached = _hrep_from_generators(self.dim, *self._vrep)
            self._state["hrep"] = cached
        return cached

    def vrep(self) -> tuple:
        """(vertices, rays), minimal and lexicographically sorted."""
        cached = self._state.get("vrep")
        if cached is None:
            cached = _generators_from_hrep(self.dim, self.hrep())
            self._state["vrep"] = cached
            self._state["emptiness"] = NONEMPTY if cached[0] else EMPTY
        return cached

    def vertices(self) -> tuple:
        return self.vrep()[0]

    def rays(self) -> tuple:
        return self.vrep()[1]

    def canonical(self) -> "Polyhedron":
        """Equivalent polyhedron with minimal, sorted facet and generator lists."""
        if self._state.get("canonical"):
            return self
        if self._vrep is not None and self._state.get("hrep") is None:
            hrep = self.hrep()  # exact irredundant facets from raw generators
        else:
            vs, rs = self.vrep()
            if not vs:
                return Polyhedron.empty(self.dim)
            hrep = _hrep_from_generators(self.dim, vs, rs)
        p = Polyhedron(self.dim, _hrep=hrep)
        if p.is_empty():
            return Polyhedron.empty(self.dim)
        p._state["canonical"] = True
        return p

    # -- predicates --------------------------------------------------------

    def contains(self, x) -> bool:
        x = rat_vector(x)
        if len(x) != self.dim:
            raise GeometryError("point dimension mismatch")
        return all(dot(a, x) >= b for a, b in self.hrep())

    def contains_in_interior(self, x) -> bool:
        x = rat_vector(x)
        return all(dot(a, x) > b for a, b in self.hrep())

    def contains_ray(self, r) -> bool:
        r = rat_vector(r)
        return all(dot(a, r) >= 0 for a, _ in self.hrep())

    def contains_set(self, other: "Polyhedron") -> bool:
        if other.is_empty():
            return True
        vs, rs = other.vrep()
        return all(self.contains(v) for v in vs) and all(self.contains_ray(r) for r in rs)

    def same_set(self, other: "Polyhedron") -> bool:
        return self.contains_set(other) and other.contains_set(self)

    def is_cone(self) -> bool:
        vs = self.vertices()
        return len(vs) == 1 and is_zero_vector(vs[0])

    # -- operations --------------------------------------------------------

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        if self.dim != other.dim:
            raise GeometryError("dimension mismatch in intersection")
        if self.emptiness == EMPTY or other.emptiness == EMPTY:
            return Polyhedron.empty(self.dim)
        return Polyhedron(self.dim, _hrep=self.hrep() + other.hrep()).canonical()

    def minkowski_sum_cone(self, cone: "Polyhedron") -> "Polyhedron":
        if self.dim != cone.dim:
            raise GeometryError("dimension mismatch in Minkowski sum")
        if not cone.is_cone():
            raise GeometryError("second operand must be a cone with vertex 0")
        if self.is_empty():
            return Polyhedron.empty(self.dim)
        vs, rs = self.vrep()
        return Polyhedron.from_generators(self.dim, vs, rs + cone.rays()).canonical()

    def translate(self, x) -> "Polyhedron":
        x = rat_vector(x)
        vs, rs = self.vrep()
        return Polyhedron.from_generators(self.dim, [vec_add(v, x) for v in vs], rs)

    def section(self, i: int) -> "Polyhedron":
        """Slice {x in P : x_i = 1} (0-based axis)."""
        e = unit(self.dim, i)
        slab = Polyhedron.from_hrep(self.dim, [(e, ONE), (vec_neg(e), -ONE)])
        return self.intersect(slab)

    def min_along_axis(self, i: int):
        """Exact min{t : t e_i in P}; raises on miss or unboundedness."""
        lo, hi = None, None
        feasible = True
        for a, b in self.hrep():
            ai = a[i]
            if ai > 0:
                v = b / ai
                lo = v if lo is None or v > lo else lo
            elif ai < 0:
                v = b / ai
                hi = v if hi is None or v < hi else hi
            elif b > 0:
                feasible = False
        if not feasible or (lo is not None and hi is not None and lo > hi):
            raise GeometryError("axis line does not meet the polyhedron")
        if lo is None:
            raise GeometryError("unbounded below along the axis")
        return lo

    def lex_min_vertex(self) -> tuple:
        vs = self.vertices()
        if not vs:
            raise GeometryError("empty polyhedron has no vertices")
        return min(vs)


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------

def hrep_from_vrep(dim, vertices, rays=()) -> Polyhedron:
    return Polyhedron.from_generators(dim, vertices, rays).canonical()


def vrep_from_hrep(dim, rows) -> Polyhedron:
    return Polyhedron.from_hrep(dim, rows).canonical()


def intersect(p: Polyhedron, q: Polyhedron) -> Polyhedron:
    return p.intersect(q)


def minkowski_sum_cone(p: Polyhedron, cone: Polyhedron) -> Polyhedron:
    return p.minkowski_sum_cone(cone)


def hull_of_union(pieces) -> Polyhedron:
    """Closed convex hull of a union of nonempty polyhedra."""
    pieces = list(pieces)
    if not pieces:
        raise GeometryError("hull of an empty collection")
    dim = pieces[0].dim
    verts, rays = [], []
    for p in pieces:
        if p.dim != dim:
            raise GeometryError("dimension mismatch in hull")
        if p.is_empty():
            raise GeometryError("hull over an empty piece")
        vs, rs = p.vrep()
        verts.extend(vs)
        rays.extend(rs)
    return Polyhedron.from_generators(dim, verts, rays).canonical()


def support_of_negation(a: Polyhedron, y):
    """sup{-y.x : x in A}, or None standing for +infinity.

    Finite exactly when no recession ray of A has positive inner product
    with -y; the value is then attained at a generator vertex.
    """
    if a.is_empty():
        raise GeometryError("support function of an empty set")
    y = rat_vector(y)
    vs, rs = a.vrep()
    for r in rs:
        if dot(y, r) < 0:
            return None
    return max(-dot(y, v) for v in vs)


def section(cone: Polyhedron, i: int) -> Polyhedron:
    return cone.section(i)


def cone_over(p: Polyhedron) -> Polyhedron:
    """Closed cone {t x : t >= 0, x in P} spanned by a polyhedron."""
    vs, rs = p.vrep()
    gens = [v for v in vs if not is_zero_vector(v)] + list(rs)
    return Polyhedron.cone_from_rays(p.dim, gens).canonical()


def is_compactly_generated(cone: Polyhedron, i: int) -> bool:
    """True when the slice at x_i = 1 is compact, nonempty and spans the cone."""
    s = cone.section(i)
    if s.is_empty() or s.rays():
        return False
    return cone_over(s).same_set(cone)


def min_along_axis(p: Polyhedron, i: int):
    return p.min_along_axis(i)


def contains(p: Polyhedron, x) -> bool:
    return p.contains(x)


@dataclass(frozen=True)
class HullWeight:
    weight: object
    witness: tuple
    piece: int


def decompose_in_hull(x, pieces) -> list[HullWeight]:
    """Write x as a convex combination of points of the pieces.

    Returns weights >= 0 summing to one with one witness point per used
    piece; the weighted witnesses reconstruct x exactly and at most dim+1
    weights are nonzero (the solution is a basic point of an LP with dim+1
    rows).  Recession rays of the pieces are admitted only when unavoidable
    and are folded into the witness of their piece.
    """
    pieces = list(pieces)
    if not pieces:
        raise GeometryError("decomposition over an empty collection")
    dim = pieces[0].dim
    x = rat_vector(x)
    lp = LinearProgram()
    vert_vars, ray_vars = [], []
    for p in pieces:
        vs, rs = p.vrep()
        vert_vars.append([(lp.add_var(nonneg=True), v) for v in vs])
        ray_vars.append([(lp.add_var(nonneg=True), r) for r in rs])
    for d in range(dim):
        coeffs = {}
        for k in range(len(pieces)):
            for j, v in vert_vars[k]:
                if v[d]:
                    coeffs[j] = v[d]
            for j, r in ray_vars[k]:
                if r[d]:
                    coeffs[j] = r[d]
        lp.add_constraint(coeffs, EQ, x[d])
    lp.add_constraint({j: ONE for k in range(len(pieces)) for j, _ in vert_vars[k]}, EQ, ONE)
    lp.set_objective({j: ONE for k in range(len(pieces)) for j, _ in ray_vars[k]})
    res = lp.solve()
    if res.status != OPTIMAL:
        raise GeometryError("point is not in the hull of the pieces")
    out = []
    for k in range(len(pieces)):
        w = sum((res.x[j] for j, _ in vert_vars[k]), ZERO)
        ray_part = zeros(dim)
        for j, r in ray_vars[k]:
            if res.x[j]:
                ray_part = vec_add(ray_part, vec_scale(res.x[j], r))
        if w == 0:
            if not is_zero_vector(ray_part):
                raise GeometryError("hull point needs a pure recession contribution")
            continue
        point = zeros(dim)
        for j, v in vert_vars[k]:
            if res.x[j]:
                point = vec_add(point, vec_scale(res.x[j], v))
        witness = tuple((point[d] + ray_part[d]) / w for d in range(dim))
        out.append(HullWeight(weight=w, witness=witness, piece=k))
    return out


# ---------------------------------------------------------------------------
# Support-function epigraphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupportEpigraph:
    """Epigraph of the support function of a negated set.

    ``base`` lives in dimension d+1 with coordinates (y0, y) and collects
    the pairs with y0 >= sup{-y.x : x in A}.  It is a cone containing the
    upward ray (1, 0, ..., 0); its projection onto the y-part is the
    domain of the support function.
    """

    base: Polyhedron

    @property
    def dim(self) -> int:
        return self.base.dim - 1

    def value(self, y):
        """Support value at y read off the epigraph (None for +infinity)."""
        y = rat_vector(y)
        lo = None
        for a, b in self.base.hrep():
            if a[0] > 0:
                v = (b - dot(a[1:], y)) / a[0]
                lo = v if lo is None or v > lo else lo
            elif dot(a[1:], y) < b:
                return None
        return lo if lo is not None else None

    def domain_slice(self, i: int) -> Polyhedron:
        """Slice of the epigraph at y_i = 1 (0-based asset axis)."""
        return self.base.section(1 + i)


def support_epigraph_of_negation(a: Polyhedron) -> SupportEpigraph:
    """Epigraph of y -> sup{-y.x : x in A}, built from A's generators.

    One halfspace per generator: vertices v give y0 + v.y >= 0 and rays r
    give r.y >= 0; for A equal to the whole space this collapses to the
    single upward ray at y = 0.
    """
    if a.is_empty():
        raise GeometryError("support epigraph of an empty set")
    vs, rs = a.vrep()
    rows = [((ONE,) + tuple(v), ZERO) for v in vs]
    rows += [((ZERO,) + tuple(r), ZERO) for r in rs]
    return SupportEpigraph(Polyhedron.from_hrep(a.dim + 1, rows).canonical())


def negated_epigraph_section(a: Polyhedron, i: int) -> Polyhedron:
    """Negative of the support epigraph of -A, sliced at y_i = 1.

    The result lives in dimension d with the axis-i coordinate dropped and
    the (negated) support value appended last, which is the shape used for
    plotting dual sections: its top face is the graph of the negated
    support function over the sliced domain, and it is unbounded below.
    """
    epi = support_epigraph_of_negation(a)
    sl = epi.domain_slice(i)
    if sl.is_empty():
        return Polyhedron.empty(a.dim)
    vs, rs = sl.vrep()

    def transform(p):
        y0, y = p[0], p[1:]
        return tuple(y[j] for j in range(len(y)) if j != i) + (-y0,)

    verts = [transform(v) for v in vs]
    rays = [transform(r) for r in rs if not is_zero_vector(transform(r))]
    return Polyhedron.from_generators(a.dim, verts, rays).canonical()


# ---------------------------------------------------------------------------
# Unions of polyhedra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolyUnion:
    """Finite union of nonempty polyhedra of a common dimension."""

    dim: int
    pieces: tuple

    @staticmethod
    def of(dim: int, pieces) -> "PolyUnion":
        return PolyUnion(dim, tuple(pieces))

    @staticmethod
    def empty(dim: int) -> "PolyUnion":
        return PolyUnion(dim, ())

    def is_empty(self) -> bool:
        return not self.pieces

    def contains(self, x) -> bool:
        return any(p.contains(x) for p in self.pieces)


def reduce_union(u: PolyUnion) -> PolyUnion:
    """Drop empty pieces, duplicates, and pieces contained in another piece."""
    by_key = {}
    for p in u.pieces:
        if p.is_empty():
            continue
        q = p.canonical()
        by_key.setdefault(q.hrep(), q)
    pieces = [by_key[k] for k in sorted(by_key)]
    kept = []
    for i, p in enumerate(pieces):
        if any(j != i and q.contains_set(p) for j, q in enumerate(pieces)):
            continue
        kept.append(p)
    return PolyUnion(u.dim, tuple(kept))


def union_intersect(u: PolyUnion, v: PolyUnion, cap: int = None) -> PolyUnion:
    """Cross-intersection of two unions, reduced."""
    pieces = []
    for p in u.pieces:
        for q in v.pieces:
            w = p.intersect(q)
            if not w.is_empty():
                pieces.append(w)
    if cap is not None and len(pieces) > cap:
        raise ResourceCapError(f"union grew to {len(pieces)} pieces (cap {cap})")
    return reduce_union(PolyUnion(u.dim, tuple(pieces)))


def union_minkowski_cone(u: PolyUnion, cone: Polyhedron) -> PolyUnion:
    return reduce_union(PolyUnion(u.dim, tuple(p.minkowski_sum_cone(cone) for p in u.pieces)))


def union_vertices(u: PolyUnion) -> list:
    """Vertices of the union's boundary complex.

    A boundary vertex needs dim tight facets, which can come from at most
    dim distinct pieces, so candidates are the vertices of every subfamily
    intersection of size <= dim.  Candidates swallowed by the topological
    interior of some piece are not on the boundary and are dropped.
    """
    from itertools import combinations

    pieces = list(u.pieces)
    candidates = set()
    max_k = min(u.dim, len(pieces))
    for size in range(1, max_k + 1):
        for combo in combinations(pieces, size):
            w = combo[0]
            for q in combo[1:]:
                w = w.intersect(q)
                if w.is_empty():
                    break
            if w.is_empty():
                continue
            candidates.update(w.vertices())
    out = [v for v in candidates if not any(p.contains_in_interior(v) for p in pieces)]
    return sorted(out)
