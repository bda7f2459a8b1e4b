"""Induced representations of finite abelian groups, multiplicity functions,
Koopman representations of finite actions and the product-multiplicity fact.

Spectral measures of a finite abelian group are multiplicity functions on
the dual group; characters chi_y(x) = exp(2 pi i sum x_j y_j / d_j) are keyed
by the residue vector y.  Multiplicities come from the trace formula

    m(chi) = |G|^-1 sum_g conj(chi(g)) tr rho(g)

and are rounded with a hard integrality check.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .abelian import (
    Element,
    FiniteAbelianGroup,
    Subgroup,
    abelian_groups_of_order,
    pairing_index,
    subgroup_candidates,
    trivial_subgroup,
)

ATOL = 1e-8


class RepresentationError(ValueError):
    pass


class BadCrossSection(ValueError):
    pass


class NotSimpleSpectrum(ValueError):
    pass


class NotErgodic(ValueError):
    pass


class InvalidAction(ValueError):
    pass


def _chi(group: FiniteAbelianGroup, y: Element, x: Element) -> complex:
    return cmath.exp(2j * math.pi * float(pairing_index(group, x, y)))


def _round_multiplicity(z: complex, label: str) -> int:
    k = round(z.real)
    if abs(z - k) > ATOL:
        raise RepresentationError(f"non-integral multiplicity {z} at {label}")
    return int(k)


def _mat_power(M: np.ndarray, k: int) -> np.ndarray:
    return np.linalg.matrix_power(M, k)


# representations -----------------------------------------------------------

@dataclass
class FiniteUnitaryRep:
    """Unitary representation of G given by one matrix per canonical generator."""

    group: FiniteAbelianGroup
    generators: tuple  # ndarray per generator
    _table: Optional[dict] = field(default=None, repr=False)
    _mult: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        gens = [np.asarray(M, dtype=complex) for M in self.generators]
        if len(gens) != self.group.rank:
            raise RepresentationError("one matrix per generator required")
        self.generators = tuple(gens)
        n = self.dim
        eye = np.eye(n)
        for M, d in zip(gens, self.group.cyclic_orders):
            if M.shape != (n, n):
                raise RepresentationError("generator matrices must be square and equal-sized")
            if not np.allclose(M.conj().T @ M, eye, atol=ATOL):
                raise RepresentationError("generator matrix is not unitary")
            if not np.allclose(_mat_power(M, d), eye, atol=ATOL):
                raise RepresentationError("generator matrix order does not divide its cyclic order")
        for A, B in itertools.combinations(gens, 2):
            if not np.allclose(A @ B, B @ A, atol=ATOL):
                raise RepresentationError("generator matrices do not commute")

    @property
    def dim(self) -> int:
        return self.generators[0].shape[0] if self.generators else 0

    def matrix(self, x: Element) -> np.ndarray:
        if self._table is None:
            self._table = {}
        x = self.group.normalize(x)
        M = self._table.get(x)
        if M is None:
            M = np.eye(self.dim, dtype=complex)
            for G, k in zip(self.generators, x):
                if k:
                    M = M @ _mat_power(G, k)
            self._table[x] = M
        return M

    def multiplicities(self) -> dict[Element, int]:
        """chi_y -> multiplicity, over all y (zeros included)."""
        if self._mult is None:
            g = self.group
            traces = {x: np.trace(self.matrix(x)) for x in g.elements}
            self._mult = {
                y: _round_multiplicity(
                    sum(_chi(g, y, x).conjugate() * traces[x] for x in g.elements) / g.order, str(y))
                for y in g.elements
            }
            if sum(self._mult.values()) != self.dim:
                raise RepresentationError("multiplicities do not add up to the dimension")
        return self._mult


@dataclass
class SubgroupRep:
    """Unitary representation of H <= G, one matrix per element of H."""

    group: FiniteAbelianGroup
    subgroup: Subgroup
    matrices: dict
    _mult: Optional[dict] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return next(iter(self.matrices.values())).shape[0]

    def matrix(self, h: Element) -> np.ndarray:
        return self.matrices[self.group.normalize(h)]

    def multiplicities(self) -> dict[Element, int]:
        """Keyed by the canonical (least) G-residue vector restricting to each character of H."""
        if self._mult is None:
            g, H = self.group, self.subgroup
            traces = {h: np.trace(self.matrices[h]) for h in H.elements}
            out = {}
            for y in restriction_classes(g, H):
                out[y] = _round_multiplicity(
                    sum(_chi(g, y, h).conjugate() * traces[h] for h in H.elements) / H.order, str(y))
            if sum(out.values()) != self.dim:
                raise RepresentationError("multiplicities do not add up to the dimension")
            self._mult = out
        return self._mult


def restriction_classes(group: FiniteAbelianGroup, H: Subgroup) -> list[Element]:
    """Canonical representatives of G-hat / H-perp, i.e. of the characters of H."""
    return sorted({restrict(group, H, y) for y in group.elements})


_ann_cache: dict = {}


def restrict(group: FiniteAbelianGroup, H: Subgroup, y: Element) -> Element:
    """Least residue vector in the coset y + H-perp (the restriction chi_y|_H)."""
    key = (group, H.elements)
    ann = _ann_cache.get(key)
    if ann is None:
        ann = _ann_cache[key] = sorted(H.annihilator().elements)
    return min(group.add(y, a) for a in ann)


def subgroup_rep_from_characters(group: FiniteAbelianGroup, H: Subgroup, ys: Sequence[Element],
                                 basis: Optional[np.ndarray] = None) -> SubgroupRep:
    """Direct sum of chi_y|_H, optionally conjugated by a unitary ``basis``."""
    n = len(ys)
    Q = np.eye(n, dtype=complex) if basis is None else basis
    mats = {}
    for h in H.elements:
        D = np.diag([_chi(group, y, h) for y in ys])
        mats[h] = Q @ D @ Q.conj().T
    return SubgroupRep(group, H, mats)


def rep_from_characters(group: FiniteAbelianGroup, ys: Sequence[Element],
                        basis: Optional[np.ndarray] = None) -> FiniteUnitaryRep:
    n = len(ys)
    Q = np.eye(n, dtype=complex) if basis is None else basis
    gens = []
    for e in group.gens():
        D = np.diag([_chi(group, y, e) for y in ys])
        gens.append(Q @ D @ Q.conj().T)
    return FiniteUnitaryRep(group, tuple(gens))


def multiplicity_function(rep) -> tuple[dict, set]:
    m = rep.multiplicities()
    return m, {k for k in m.values() if k > 0}


def direct_sum(a: FiniteUnitaryRep, b: FiniteUnitaryRep) -> FiniteUnitaryRep:
    gens = []
    for A, B in zip(a.generators, b.generators):
        M = np.zeros((a.dim + b.dim,) * 2, dtype=complex)
        M[: a.dim, : a.dim] = A
        M[a.dim:, a.dim:] = B
        gens.append(M)
    return FiniteUnitaryRep(a.group, tuple(gens))


# induction -----------------------------------------------------------------

def cosets(group: FiniteAbelianGroup, H: Subgroup) -> list[frozenset]:
    seen = set()
    out = []
    for x in group.elements:
        if x in seen:
            continue
        c = frozenset(group.add(x, h) for h in H.elements)
        seen |= c
        out.append(c)
    return out


def canonical_cross_section(group: FiniteAbelianGroup, H: Subgroup) -> list[Element]:
    return [min(c) for c in cosets(group, H)]


def random_cross_section(group: FiniteAbelianGroup, H: Subgroup, rng: np.random.Generator) -> list[Element]:
    out = []
    for c in cosets(group, H):
        if group.zero in c:
            out.append(group.zero)
        else:
            opts = sorted(c)
            out.append(opts[int(rng.integers(len(opts)))])
    return out


def induce(group: FiniteAbelianGroup, H: Subgroup, V: SubgroupRep,
           cross_section: Optional[Sequence[Element]] = None, literal: bool = False) -> FiniteUnitaryRep:
    """U_{-g} f(y) = V_{-h(g, y)} f(g y) with h(g, y) = -s(g y) + g + s(y).

    This is the Koopman form of the induced action (y, x) -> (g y, S_{h(g, y)} x)
    when V_h f = f o S_{-h}; then U restricted to H contains V.  ``literal`` uses
    V_{h(g, y)} instead, which induces the conjugate of V (same multiplicity set).
    """
    cs = cosets(group, H)
    s = list(cross_section) if cross_section is not None else canonical_cross_section(group, H)
    if len(s) != len(cs):
        raise BadCrossSection("one representative per coset required")
    where = {}
    for i, (c, rep) in enumerate(zip(cs, s)):
        rep = group.normalize(rep)
        if rep not in c:
            raise BadCrossSection(f"{rep} is not in coset {i}")
        if group.zero in c and any(rep):
            raise BadCrossSection("s(H) must be 0")
        for x in c:
            where[x] = i
    s = [group.normalize(x) for x in s]
    k, d = len(cs), V.dim

    def W(g: Element) -> np.ndarray:
        # W(g) = U_{-g}
        M = np.zeros((k * d, k * d), dtype=complex)
        for y in range(k):
            gy = where[group.add(g, s[y])]
            h = group.add(group.sub(g, s[gy]), s[y])
            if h not in H:
                raise BadCrossSection("cocycle value left H")
            M[y * d:(y + 1) * d, gy * d:(gy + 1) * d] = V.matrix(h if literal else group.neg(h))
        return M

    gens = tuple(W(group.neg(e)) for e in group.gens())
    return FiniteUnitaryRep(group, gens)


@dataclass
class Prop11Report:
    index: int
    dim_v: int
    dim_u: int
    set_v: list
    set_u: list
    sets_equal: bool
    support_projects: bool
    pointwise: bool

    @property
    def ok(self) -> bool:
        return self.sets_equal and self.support_projects and self.pointwise and self.dim_u == self.index * self.dim_v

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ok"] = self.ok
        return d


def check_prop11(V: SubgroupRep, group: FiniteAbelianGroup, H: Subgroup,
                 cross_section: Optional[Sequence[Element]] = None) -> Prop11Report:
    U = induce(group, H, V, cross_section)
    mu, set_u = multiplicity_function(U)
    mv, set_v = multiplicity_function(V)
    supp_u = {y for y, k in mu.items() if k}
    supp_v = {y for y, k in mv.items() if k}
    image = {restrict(group, H, y) for y in supp_u}
    pointwise = all(mu[y] == mv[restrict(group, H, y)] for y in group.elements)
    index = group.order // H.order
    return Prop11Report(index, V.dim, U.dim, sorted(set_v), sorted(set_u),
                        set_u == set_v, image == supp_v, pointwise)


# finite actions ------------------------------------------------------------

@dataclass
class FiniteAction:
    """G acting on points 0..n-1 with weights; one permutation per generator (p -> perm[p])."""

    group: FiniteAbelianGroup
    weights: tuple
    perms: tuple

    def __post_init__(self):
        n = len(self.weights)
        if abs(sum(self.weights) - 1) > 1e-12 or any(w <= 0 for w in self.weights):
            raise InvalidAction("weights must be positive and sum to 1")
        if len(self.perms) != self.group.rank:
            raise InvalidAction("one permutation per generator required")
        for p, d in zip(self.perms, self.group.cyclic_orders):
            if sorted(p) != list(range(n)):
                raise InvalidAction("not a permutation")
            if any(abs(self.weights[p[i]] - self.weights[i]) > 1e-12 for i in range(n)):
                raise InvalidAction("permutation does not preserve the weights")
            q = list(range(n))
            for _ in range(d):
                q = [p[i] for i in q]
            if q != list(range(n)):
                raise InvalidAction("permutation order does not divide the generator order")
        for a, b in itertools.combinations(self.perms, 2):
            if [a[b[i]] for i in range(n)] != [b[a[i]] for i in range(n)]:
                raise InvalidAction("permutations do not commute")

    @property
    def size(self) -> int:
        return len(self.weights)

    def orbits(self) -> list[list[int]]:
        seen = set()
        out = []
        for p in range(self.size):
            if p in seen:
                continue
            orb = {p}
            stack = [p]
            while stack:
                x = stack.pop()
                for perm in self.perms:
                    y = perm[x]
                    if y not in orb:
                        orb.add(y)
                        stack.append(y)
            seen |= orb
            out.append(sorted(orb))
        return out

    def is_ergodic(self) -> bool:
        return len(self.orbits()) == 1

    def perm(self, x: Element) -> tuple:
        """T_x as a tuple (p -> T_x p)."""
        q = list(range(self.size))
        for p, k in zip(self.perms, self.group.normalize(x)):
            for _ in range(k):
                q = [p[i] for i in q]
        return tuple(q)


def koopman_rep(action: FiniteAction, mean_zero: bool = True) -> FiniteUnitaryRep:
    """U(g) f = f o T_{-g} on L^2(weights), in the orthonormal basis e_p / sqrt(w_p)."""
    n = action.size
    gens = []
    for perm in action.perms:
        # (U(e) f)(p) = f(T_{-e} p): the point mapped to p by T_e
        P = np.zeros((n, n))
        for p in range(n):
            P[perm[p], p] = 1.0
        gens.append(P.astype(complex))
    if mean_zero:
        if n == 1:
            return FiniteUnitaryRep(action.group, tuple(np.zeros((0, 0), dtype=complex) for _ in gens))
        root = np.sqrt(np.asarray(action.weights, dtype=float))
        # orthonormal complement of sqrt(w)
        Q, _ = np.linalg.qr(np.column_stack([root, np.eye(n)[:, : n - 1]]))
        B = Q[:, 1:n]
        gens = [B.conj().T @ P @ B for P in gens]
    return FiniteUnitaryRep(action.group, tuple(gens))


def induce_action(group: FiniteAbelianGroup, H: Subgroup, action: FiniteAction,
                  cross_section: Optional[Sequence[Element]] = None) -> FiniteAction:
    """G acting on G/H x Y by g(y, p) = (g y, S_{h(g, y)} p), S the restriction of ``action`` to H.

    Point (i, p) is numbered i * |Y| + p; weights are uniform on G/H.
    """
    if action.group != group:
        raise InvalidAction("the H-action is given as a G-action restricted to H")
    cs = cosets(group, H)
    s = [group.normalize(x) for x in (cross_section if cross_section is not None else canonical_cross_section(group, H))]
    if len(s) != len(cs) or any(x not in c for x, c in zip(s, cs)) or group.zero not in cs[0] or any(s[0]):
        raise BadCrossSection("bad cross-section")
    where = {x: i for i, c in enumerate(cs) for x in c}
    k, n = len(cs), action.size
    perms = []
    for e in group.gens():
        out = [0] * (k * n)
        for i in range(k):
            j = where[group.add(e, s[i])]
            h = group.add(group.sub(e, s[j]), s[i])
            S = action.perm(h)
            for p in range(n):
                out[i * n + p] = j * n + S[p]
        perms.append(tuple(out))
    weights = tuple(w / k for _ in range(k) for w in action.weights)
    return FiniteAction(group, weights, tuple(perms))


def rep_multiplicity_set(rep: FiniteUnitaryRep) -> set[int]:
    if rep.dim == 0:
        return set()
    return multiplicity_function(rep)[1]


def translation_action(group: FiniteAbelianGroup, H: Optional[Subgroup] = None) -> FiniteAction:
    """G acting on G/H by translation, uniform weights."""
    H = H if H is not None else trivial_subgroup(group)
    cs = cosets(group, H)
    where = {x: i for i, c in enumerate(cs) for x in c}
    reps = [min(c) for c in cs]
    perms = tuple(tuple(where[group.add(r, e)] for r in reps) for e in group.gens())
    k = len(cs)
    return FiniteAction(group, tuple([1 / k] * k), perms)


def disjoint_union(parts: Sequence[FiniteAction], masses: Sequence[float]) -> FiniteAction:
    group = parts[0].group
    weights, perms = [], [[] for _ in group.gens()]
    offset = 0
    for a, m in zip(parts, masses):
        weights += [w * m for w in a.weights]
        for j, p in enumerate(a.perms):
            perms[j] += [offset + x for x in p]
        offset += a.size
    total = sum(weights)
    return FiniteAction(group, tuple(w / total for w in weights), tuple(tuple(p) for p in perms))


def product_action(a: FiniteAction, b: FiniteAction) -> FiniteAction:
    """(g1, g2) -> T1(g1) x T2(g2) on X1 x X2, point (p, q) numbered p * |X2| + q."""
    group = FiniteAbelianGroup(a.group.cyclic_orders + b.group.cyclic_orders)
    nb = b.size
    weights = tuple(wa * wb for wa in a.weights for wb in b.weights)
    perms = []
    for p in a.perms:
        perms.append(tuple(p[i] * nb + j for i in range(a.size) for j in range(nb)))
    for q in b.perms:
        perms.append(tuple(i * nb + q[j] for i in range(a.size) for j in range(nb)))
    return FiniteAction(group, weights, tuple(perms))


@dataclass
class ProductReport:
    m1: list
    m2: list
    product: list
    expected: list  # M(T2) u {1}
    t2_orbits: int
    general: list  # M(T2) u {#orbits of T2}

    @property
    def fact_applies(self) -> bool:
        return self.t2_orbits == 1

    @property
    def ok(self) -> bool:
        """The product set matches the orbit-corrected prediction (the fact itself when T2 is ergodic)."""
        return self.product == self.general

    @property
    def fact_holds(self) -> bool:
        return self.product == self.expected

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d.update(ok=self.ok, fact_applies=self.fact_applies, fact_holds=self.fact_holds)
        return d


def product_multiplicity_check(action1: FiniteAction, action2: FiniteAction) -> ProductReport:
    """M of the G1 x G2 product action against M(T2) u {1}.

    With T1 ergodic and simple, chi1 x chi2 has multiplicity m1(chi1) m2(chi2) on
    L^2(X1 x X2), where m2 counts constants too, so the mean-zero set is
    M(T2) u {#orbits of T2}; the two predictions agree exactly when T2 is ergodic.
    """
    m1 = rep_multiplicity_set(koopman_rep(action1))
    if any(k > 1 for k in m1):
        raise NotSimpleSpectrum(f"T1 has multiplicities {sorted(m1)}")
    if not action1.is_ergodic():
        raise NotErgodic(f"T1 has {len(action1.orbits())} orbits")
    m2 = rep_multiplicity_set(koopman_rep(action2))
    prod = rep_multiplicity_set(koopman_rep(product_action(action1, action2)))
    k = len(action2.orbits())
    if action1.size > 1:
        expected, general = m2 | {1}, m2 | {k}
    else:
        expected = general = set(m2)
    return ProductReport(sorted(m1), sorted(m2), sorted(prod), sorted(expected), k, sorted(general))


# random instances ----------------------------------------------------------

def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def _groups_up_to(order: int) -> list[FiniteAbelianGroup]:
    out = []
    for n in range(2, order + 1):
        out += abelian_groups_of_order(n)
    return out


def _subgroups(group: FiniteAbelianGroup) -> list[Subgroup]:
    return [trivial_subgroup(group)] + subgroup_candidates(group)


@dataclass
class InductionInstance:
    group: FiniteAbelianGroup
    H: Subgroup
    V: SubgroupRep
    ys: list


def random_induction_instance(rng: np.random.Generator, max_order: int = 24, max_index: int = 6,
                              max_dim: int = 8) -> InductionInstance:
    groups = _groups_up_to(max_order)
    while True:
        G = groups[int(rng.integers(len(groups)))]
        subs = [H for H in _subgroups(G) if G.order // H.order <= max_index]
        if subs:
            break
    H = subs[int(rng.integers(len(subs)))]
    classes = restriction_classes(G, H)
    dim = int(rng.integers(1, max_dim + 1))
    ys = [classes[int(rng.integers(len(classes)))] for _ in range(dim)]
    V = subgroup_rep_from_characters(G, H, ys, random_unitary(dim, rng))
    return InductionInstance(G, H, V, ys)


def random_ergodic_simple(rng: np.random.Generator, max_order: int = 12) -> FiniteAction:
    """G acting on G/K: transitive, mean-zero multiplicities all 1."""
    groups = _groups_up_to(max_order)
    G = groups[int(rng.integers(len(groups)))]
    subs = [K for K in _subgroups(G) if K.order < G.order]
    K = subs[int(rng.integers(len(subs)))]
    return translation_action(G, K)


def random_action(rng: np.random.Generator, max_order: int = 8, max_orbits: int = 3) -> FiniteAction:
    """Disjoint union of translation actions on quotients with random orbit masses."""
    groups = _groups_up_to(max_order)
    G = groups[int(rng.integers(len(groups)))]
    subs = _subgroups(G)
    k = int(rng.integers(1, max_orbits + 1))
    parts = [translation_action(G, subs[int(rng.integers(len(subs)))]) for _ in range(k)]
    masses = [int(rng.integers(1, 5)) for _ in range(k)]
    return disjoint_union(parts, masses)


def two_cycles_action() -> FiniteAction:
    """Z/2 acting on 4 points as two 2-cycles."""
    g = FiniteAbelianGroup((2,))
    return FiniteAction(g, (0.25,) * 4, ((1, 0, 3, 2),))
