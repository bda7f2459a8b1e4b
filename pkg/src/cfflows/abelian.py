"""Finite abelian groups Z/d1 x ... x Z/dk, automorphisms, characters and
the orbit-intersection multiplicity set L(G, H, v)."""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence

Element = tuple[int, ...]


class GroupError(ValueError):
    pass


class NotHomomorphism(GroupError):
    pass


class NotBijective(GroupError):
    pass


class EmptySubgroup(GroupError):
    pass


class NotFound(LookupError):
    pass


@dataclass(frozen=True)
class FiniteAbelianGroup:
    cyclic_orders: tuple[int, ...]

    def __post_init__(self):
        orders = tuple(int(d) for d in self.cyclic_orders)
        if not orders or any(d < 2 for d in orders):
            raise GroupError(f"cyclic orders must be >= 2, got {orders}")
        object.__setattr__(self, "cyclic_orders", orders)

    @property
    def rank(self) -> int:
        return len(self.cyclic_orders)

    @property
    def order(self) -> int:
        return math.prod(self.cyclic_orders)

    @property
    def zero(self) -> Element:
        return (0,) * self.rank

    @cached_property
    def elements(self) -> tuple[Element, ...]:
        return tuple(itertools.product(*(range(d) for d in self.cyclic_orders)))

    def gens(self) -> list[Element]:
        out = []
        for j in range(self.rank):
            e = [0] * self.rank
            e[j] = 1
            out.append(tuple(e))
        return out

    def contains(self, x: Sequence[int]) -> bool:
        return len(x) == self.rank and all(0 <= xi < d for xi, d in zip(x, self.cyclic_orders))

    def normalize(self, x: Iterable[int]) -> Element:
        x = tuple(x)
        if len(x) != self.rank:
            raise GroupError(f"element {x} has wrong length for {self}")
        return tuple(xi % d for xi, d in zip(x, self.cyclic_orders))

    def add(self, x: Element, y: Element) -> Element:
        return tuple((a + b) % d for a, b, d in zip(x, y, self.cyclic_orders))

    def neg(self, x: Element) -> Element:
        return tuple((-a) % d for a, d in zip(x, self.cyclic_orders))

    def sub(self, x: Element, y: Element) -> Element:
        return tuple((a - b) % d for a, b, d in zip(x, y, self.cyclic_orders))

    def mul(self, k: int, x: Element) -> Element:
        return tuple((k * a) % d for a, d in zip(x, self.cyclic_orders))

    def element_order(self, x: Element) -> int:
        o = 1
        for a, d in zip(x, self.cyclic_orders):
            o = math.lcm(o, d // math.gcd(a, d))
        return o

    def index(self, x: Element) -> int:
        i = 0
        for a, d in zip(x, self.cyclic_orders):
            i = i * d + a
        return i

    def dual(self) -> "FiniteAbelianGroup":
        """Character group, canonically identified with residue vectors of the same orders."""
        return self

    def __str__(self):
        return " x ".join(f"Z/{d}" for d in self.cyclic_orders)

    def to_dict(self) -> dict:
        return {"orders": list(self.cyclic_orders)}

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteAbelianGroup":
        return cls(tuple(d["orders"]))


@dataclass(frozen=True)
class GroupAutomorphism:
    group: FiniteAbelianGroup
    generator_images: tuple[Element, ...]

    def __call__(self, x: Element) -> Element:
        g = self.group
        acc = [0] * g.rank
        for xj, img in zip(x, self.generator_images):
            if xj:
                for k, (ik, d) in enumerate(zip(img, g.cyclic_orders)):
                    acc[k] = (acc[k] + xj * ik) % d
        return tuple(acc)

    @cached_property
    def table(self) -> dict[Element, Element]:
        return {x: self(x) for x in self.group.elements}

    def power(self, x: Element, p: int) -> Element:
        if p < 0:
            inv = self.inverse()
            for _ in range(-p):
                x = inv(x)
            return x
        for _ in range(p):
            x = self(x)
        return x

    def compose(self, other: "GroupAutomorphism") -> "GroupAutomorphism":
        """self o other."""
        return GroupAutomorphism(self.group, tuple(self(img) for img in other.generator_images))

    def inverse(self) -> "GroupAutomorphism":
        inv = {y: x for x, y in self.table.items()}
        return GroupAutomorphism(self.group, tuple(inv[e] for e in self.group.gens()))

    def is_identity(self) -> bool:
        return tuple(self.generator_images) == tuple(self.group.gens())

    def to_dict(self) -> dict:
        return {"images": [list(x) for x in self.generator_images]}

    def __str__(self):
        return "v(" + ", ".join(
            f"e{j}->{list(img)}" for j, img in enumerate(self.generator_images)
        ) + ")"


def identity_automorphism(group: FiniteAbelianGroup) -> GroupAutomorphism:
    return GroupAutomorphism(group, tuple(group.gens()))


def validate_automorphism(group: FiniteAbelianGroup, generator_images) -> GroupAutomorphism:
    images = tuple(tuple(int(a) for a in img) for img in generator_images)
    if len(images) != group.rank:
        raise GroupError(f"need {group.rank} generator images, got {len(images)}")
    for img in images:
        if not group.contains(img):
            raise GroupError(f"image {img} is not an element of {group}")
    for j, (img, d) in enumerate(zip(images, group.cyclic_orders)):
        if d % group.element_order(img):
            raise NotHomomorphism(
                f"generator {j} has order {d} but its image {img} has order "
                f"{group.element_order(img)}"
            )
    v = GroupAutomorphism(group, images)
    if len(set(v.table.values())) != group.order:
        raise NotBijective(f"{v} is not injective on {group}")
    return v


def automorphism_candidates(group: FiniteAbelianGroup, limit: Optional[int] = None) -> Iterator[GroupAutomorphism]:
    """All automorphisms in canonical (lexicographic generator-image) order."""
    choices = []
    for d in group.cyclic_orders:
        choices.append([x for x in group.elements if d % group.element_order(x) == 0 and group.element_order(x) == d])
    count = 0
    for images in itertools.product(*choices):
        v = GroupAutomorphism(group, images)
        if len(set(v.table.values())) == group.order:
            yield v
            count += 1
            if limit is not None and count >= limit:
                return


@dataclass(frozen=True)
class Subgroup:
    group: FiniteAbelianGroup
    generators: tuple[Element, ...]

    @cached_property
    def elements(self) -> frozenset:
        g = self.group
        span = {g.zero}
        frontier = [g.zero]
        gens = [g.normalize(x) for x in self.generators]
        while frontier:
            x = frontier.pop()
            for s in gens:
                y = g.add(x, s)
                if y not in span:
                    span.add(y)
                    frontier.append(y)
        return frozenset(span)

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, x) -> bool:
        return tuple(x) in self.elements

    def sorted_elements(self) -> list[Element]:
        return sorted(self.elements)

    def annihilator(self) -> "Subgroup":
        """Characters (of the canonically self-dual group) trivial on this subgroup."""
        g = self.group
        ann = [y for y in g.elements if all(pairing_index(g, x, y) == 0 for x in self.elements)]
        return Subgroup(g, tuple(ann))

    def to_dict(self) -> dict:
        return {"generators": [list(x) for x in self.generators]}


def full_subgroup(group: FiniteAbelianGroup) -> Subgroup:
    return Subgroup(group, tuple(group.gens()))


def trivial_subgroup(group: FiniteAbelianGroup) -> Subgroup:
    return Subgroup(group, ())


def cyclic_subgroups(group: FiniteAbelianGroup) -> list[Subgroup]:
    seen = set()
    out = []
    for x in group.elements:
        s = Subgroup(group, (x,))
        key = s.elements
        if key not in seen:
            seen.add(key)
            out.append(s)
    return out


# characters ----------------------------------------------------------------

def pairing_index(group: FiniteAbelianGroup, x: Element, y: Element) -> Fraction:
    """sum_j x_j y_j / d_j mod 1, so chi_y(x) = exp(2 pi i * index)."""
    s = sum(Fraction(a * b, d) for a, b, d in zip(x, y, group.cyclic_orders))
    return s - math.floor(s)


@dataclass(frozen=True)
class Character:
    group: FiniteAbelianGroup
    y: Element

    def phase(self, x: Element) -> Fraction:
        return pairing_index(self.group, x, self.y)

    def __call__(self, x: Element) -> complex:
        return cmath.exp(2j * math.pi * float(self.phase(x)))

    def is_trivial(self) -> bool:
        return not any(self.y)

    def __mul__(self, other: "Character") -> "Character":
        return Character(self.group, self.group.add(self.y, other.y))

    def conj(self) -> "Character":
        return Character(self.group, self.group.neg(self.y))

    def compose(self, v: GroupAutomorphism) -> "Character":
        """chi o v, expressed again as a residue vector."""
        return Character(self.group, dual_automorphism(v)(self.y))

    def __str__(self):
        return "chi" + ",".join(str(a) for a in self.y)


def characters(group: FiniteAbelianGroup) -> list[Character]:
    return [Character(group, y) for y in group.elements]


def dual_automorphism(v: GroupAutomorphism) -> GroupAutomorphism:
    """v-hat on the character group, (v-hat chi)(x) = chi(v(x))."""
    g = v.group
    d = g.cyclic_orders
    images = []
    for k in range(g.rank):
        # y = e_k: y'_j = d_j * v(e_j)_k / d_k  (mod d_j)
        img = []
        for j in range(g.rank):
            val = Fraction(d[j] * v.generator_images[j][k], d[k])
            if val.denominator != 1:
                raise NotHomomorphism(f"{v} has no dual in residue coordinates")
            img.append(int(val) % d[j])
        images.append(tuple(img))
    return GroupAutomorphism(g, tuple(images))


# orbits and multiplicity sets ----------------------------------------------

def orbit(v: GroupAutomorphism, g: Element) -> list[Element]:
    out = [tuple(g)]
    x = v(tuple(g))
    while x != out[0]:
        out.append(x)
        x = v(x)
    return out


def period(v: GroupAutomorphism, g: Element) -> int:
    return len(orbit(v, g))


def multiplicity_set(G: FiniteAbelianGroup, H: Subgroup, v: GroupAutomorphism) -> set[int]:
    nonzero = [h for h in H.elements if any(h)]
    if not nonzero:
        raise EmptySubgroup("L(G,H,v) ranges over H minus {0}, which is empty")
    hs = H.elements
    return {sum(1 for x in orbit(v, h) if x in hs) for h in nonzero}


def multiplicity_set_by_cycles(G: FiniteAbelianGroup, H: Subgroup, v: GroupAutomorphism) -> set[int]:
    """Independent route: permutation matrix of v, cycles read off the matrix."""
    import numpy as np

    n = G.order
    idx = {x: i for i, x in enumerate(G.elements)}
    P = np.zeros((n, n), dtype=np.int8)
    for x in G.elements:
        P[idx[v(x)], idx[x]] = 1
    in_h = np.zeros(n, dtype=bool)
    for h in H.elements:
        in_h[idx[h]] = True
    seen = np.zeros(n, dtype=bool)
    out = set()
    zero = idx[G.zero]
    for start in range(n):
        if seen[start]:
            continue
        cycle = []
        cur = start
        while not seen[cur]:
            seen[cur] = True
            cycle.append(cur)
            cur = int(np.flatnonzero(P[:, cur])[0])
        hits = int(in_h[cycle].sum())
        if hits and not (len(cycle) == 1 and cycle[0] == zero):
            out.add(hits)
    if not any(in_h[i] for i in range(n) if i != zero):
        raise EmptySubgroup("H is trivial")
    return out


def l_value(chi: Character, a: Element, v: GroupAutomorphism) -> complex:
    orb = orbit(v, a)
    return sum(chi(x) for x in orb) / len(orb)


def l_value_exact(chi: Character, a: Element, v: GroupAutomorphism) -> tuple[Fraction, ...]:
    """Orbit of phases; exact key for deciding l_chi(a) == l_eta(a)."""
    return tuple(sorted(chi.phase(x) for x in orbit(v, a)))


def same_l_value(chi: Character, eta: Character, a: Element, v: GroupAutomorphism) -> bool:
    # sums of roots of unity: compare numerically at a tolerance far above float error
    return abs(l_value(chi, a, v) - l_value(eta, a, v)) < 1e-9


def dual_orbit(v: GroupAutomorphism, chi: Character) -> list[Character]:
    vh = dual_automorphism(v)
    return [Character(chi.group, y) for y in orbit(vh, chi.y)]


def periodic_subgroup(v: GroupAutomorphism) -> frozenset:
    """v-periodic points; the whole group in the finite case."""
    return frozenset(x for x in v.group.elements if v.power(x, period(v, x)) == x)


def orbit_representatives(v: GroupAutomorphism, nonzero: bool = True) -> list[Element]:
    seen = set()
    reps = []
    for x in v.group.elements:
        if nonzero and not any(x):
            continue
        if x in seen:
            continue
        reps.append(x)
        seen.update(orbit(v, x))
    return reps


# realization ---------------------------------------------------------------

def abelian_groups_of_order(n: int) -> list[FiniteAbelianGroup]:
    """Invariant-factor decompositions d1 | d2 | ... with product n."""
    out = []

    def rec(rem: int, prev: int, acc: list[int]):
        if rem == 1:
            if acc:
                out.append(FiniteAbelianGroup(tuple(acc)))
            return
        for d in range(2, rem + 1):
            if rem % d == 0 and (prev == 0 or d % prev == 0):
                # remaining factors must be multiples of d
                r = rem // d
                if r == 1 or r % d == 0:
                    rec(r, d, acc + [d])

    rec(n, 0, [])
    return out


def subgroup_candidates(group: FiniteAbelianGroup) -> list[Subgroup]:
    """Full group first, then cyclic subgroups and subgroups on pairs of generators."""
    seen = set()
    out = []

    def push(s: Subgroup):
        if len(s.elements) > 1 and s.elements not in seen:
            seen.add(s.elements)
            out.append(s)

    push(full_subgroup(group))
    for s in cyclic_subgroups(group):
        push(s)
    if group.rank > 1:
        for x, y in itertools.combinations(group.elements, 2):
            if any(x) and any(y):
                push(Subgroup(group, (x, y)))
    return out


@dataclass
class SearchBounds:
    max_order: int = 16
    max_automorphisms: int = 2000
    max_subgroups: int = 64


@dataclass
class Witness:
    group: FiniteAbelianGroup
    subgroup: Subgroup
    automorphism: GroupAutomorphism
    value: set = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "group": self.group.to_dict(),
            "subgroup": self.subgroup.to_dict(),
            "automorphism": self.automorphism.to_dict(),
            "multiplicity_set": sorted(self.value),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Witness":
        g = FiniteAbelianGroup.from_dict(d["group"])
        h = Subgroup(g, tuple(tuple(x) for x in d["subgroup"]["generators"]))
        v = validate_automorphism(g, d["automorphism"]["images"])
        return cls(g, h, v, multiplicity_set(g, h, v))


def _orbit_sizes(v: GroupAutomorphism) -> set[int]:
    return {period(v, x) for x in v.group.elements if any(x)}


def realize(E: Iterable[int], bounds: SearchBounds = SearchBounds()) -> Witness:
    """Bounded search for (G, H, v) with L(G, H, v) = E, smallest order first."""
    target = set(int(e) for e in E)
    if not target or any(e < 1 for e in target):
        raise ValueError("E must be a nonempty set of positive integers")
    need = max(target)
    for n in range(2, bounds.max_order + 1):
        if n - 1 < len(target) or n - 1 < need:
            continue
        for G in abelian_groups_of_order(n):
            subgroups = subgroup_candidates(G)[: bounds.max_subgroups]
            for v in automorphism_candidates(G, bounds.max_automorphisms):
                # an intersection size never exceeds the orbit size
                if max(_orbit_sizes(v)) < need:
                    continue
                for H in subgroups:
                    if H.order - 1 < need:
                        continue
                    if multiplicity_set(G, H, v) == target:
                        value = multiplicity_set(G, H, v)
                        assert value == target
                        return Witness(G, H, v, value)
    raise NotFound(f"no witness for E={sorted(target)} with order <= {bounds.max_order}")


@dataclass(frozen=True)
class GroupData:
    """Cocycle target K, automorphism v of K and the sector characters (dual of K/H)."""

    group: FiniteAbelianGroup
    v: GroupAutomorphism
    sectors: Optional[Subgroup] = None

    def period(self, a: Element) -> int:
        return period(self.v, a)

    def sector_characters(self) -> list[Character]:
        if self.sectors is None:
            return characters(self.group)
        return [Character(self.group, y) for y in self.sectors.sorted_elements()]

    def orbit_reps(self) -> list[Element]:
        return orbit_representatives(self.v)

    def predicted_sector_multiplicities(self) -> set[int]:
        """#(v-hat orbit of chi within the sector group) over nontrivial chi, plus 1 (trivial sector)."""
        sec = self.sectors if self.sectors is not None else full_subgroup(self.group)
        out = {1}
        if len(sec.elements) > 1:
            out |= multiplicity_set(self.group, sec, dual_automorphism(self.v))
        return out

    def to_dict(self) -> dict:
        d = {"group": self.group.to_dict(), "automorphism": self.v.to_dict()}
        if self.sectors is not None:
            d["sectors"] = self.sectors.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GroupData":
        g = FiniteAbelianGroup.from_dict(d["group"])
        v = validate_automorphism(g, d["automorphism"]["images"])
        sec = None
        if "sectors" in d:
            sec = Subgroup(g, tuple(tuple(x) for x in d["sectors"]["generators"]))
        return cls(g, v, sec)

    @classmethod
    def from_witness(cls, w: "Witness") -> "GroupData":
        """K with v-hat = witness v, sectors = witness H."""
        return cls(w.group, dual_automorphism(w.automorphism), w.subgroup)


def z3_witness() -> GroupData:
    g = FiniteAbelianGroup((3,))
    return GroupData(g, validate_automorphism(g, [(2,)]))
