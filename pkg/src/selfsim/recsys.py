"""Tree automorphisms given by finite systems of recursion equations.

Some automorphisms that arise as conjugators live outside the group itself
but still have finite descriptions: each symbol S expands as a root cycle
power together with p sections, every section being a group element times
another symbol.  Unfolding the equations computes vertex images to any
depth; full-level evaluation with memoization on (residual word, symbol)
states yields exact level permutations, which is enough to test claimed
conjugation identities to a chosen depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import GroupSpec, dihedral_witness
from .errors import EvenQ, NoDihedralWitness, SpecMismatch
from .elements import (
    Element,
    b_letter,
    gen_a,
    identity,
    multiply,
    power,
    section_at,
)
from .permq import LevelPerm, invert_perm, level_perm


@dataclass(frozen=True)
class RecEquation:
    """S = a^root_exp (w_0 S_{j_0}, ..., w_{p-1} S_{j_{p-1}})."""

    root_exp: int
    section_words: tuple[Element, ...]
    section_symbols: tuple[str, ...]


class RecSystem:
    """A finite self-referential description of a tree automorphism."""

    __slots__ = ("spec", "equations", "root_symbol")

    def __init__(
        self,
        spec: GroupSpec,
        equations: dict[str, RecEquation],
        root_symbol: str,
    ):
        p = spec.p
        for name, eq in equations.items():
            if len(eq.section_words) != p or len(eq.section_symbols) != p:
                raise ValueError(f"symbol {name!r} must have exactly {p} sections")
            for w in eq.section_words:
                if w.spec != spec:
                    raise SpecMismatch("section word over a different spec")
            for s in eq.section_symbols:
                if s not in equations:
                    raise ValueError(f"symbol {name!r} references undefined {s!r}")
        if root_symbol not in equations:
            raise ValueError(f"undefined root symbol {root_symbol!r}")
        self.spec = spec
        self.equations = dict(equations)
        self.root_symbol = root_symbol

    def __repr__(self) -> str:
        return f"RecSystem(root={self.root_symbol!r}, symbols={sorted(self.equations)})"


def build_conjugator(spec: GroupSpec, q: int) -> RecSystem:
    """The automorphism g with sections ((ba)^((q-1)/2) g, g) at a trivial
    root, where b is the dihedral witness.  Conjugation by g carries the
    index-q line subgroup's generating pair onto standard generators."""
    if q % 2 == 0:
        raise EvenQ(f"q = {q} must be odd")
    if q < 3:
        raise ValueError("conjugator is defined for q >= 3")
    w_code = dihedral_witness(spec)
    if w_code is None:
        raise NoDihedralWitness("spec has no involutive directed generator pair")
    a = gen_a(spec)
    b = b_letter(spec, w_code)
    w = power(multiply(b, a), (q - 1) // 2)
    eq = RecEquation(0, (w, identity(spec)), ("G0", "G0"))
    return RecSystem(spec, {"G0": eq}, "G0")


_State = tuple[tuple[int, ...], str]


def _children(r: RecSystem, state: _State) -> list[tuple[int, _State]]:
    """Out-edge chars and successor states for each input char 0..p-1."""
    spec = r.spec
    p = spec.p
    letters, symbol = state
    u = Element(spec, letters)
    eq = r.equations[symbol]
    u_root = sum(-l for l in u.letters if l < 0) % p
    out = []
    for c in range(p):
        mid = (c + eq.root_exp) % p
        out_char = (mid + u_root) % p
        child_u = multiply(section_at(u, (mid,)), eq.section_words[c])
        out.append((out_char, (child_u.letters, eq.section_symbols[c])))
    return out


def rec_act_on_vertex(r: RecSystem, v: str) -> str:
    """Image of a vertex word, unfolding the equations one level per char."""
    p = r.spec.p
    state: _State = ((), r.root_symbol)
    out = []
    for ch in v:
        c = int(ch)
        if not 0 <= c < p:
            raise ValueError(f"vertex char {ch!r} out of range for p = {p}")
        edges = _children(r, state)
        out_char, state = edges[c]
        out.append(str(out_char))
    return "".join(out)


def rec_level_perm(r: RecSystem, n: int) -> LevelPerm:
    """Exact permutation the system induces on level n (memoized unfold)."""
    p = r.spec.p
    memo: dict[tuple[_State, int], np.ndarray] = {}

    def build(state: _State, k: int) -> np.ndarray:
        if k == 0:
            return np.zeros(1, dtype=np.int64)
        key = (state, k)
        found = memo.get(key)
        if found is not None:
            return found
        block = p ** (k - 1)
        out = np.empty(p**k, dtype=np.int64)
        for c, (out_char, child) in enumerate(_children(r, state)):
            out[c * block : (c + 1) * block] = out_char * block + build(child, k - 1)
        memo[key] = out
        return out

    return LevelPerm(n, build(((), r.root_symbol), n))


def rec_state_sets(r: RecSystem, n: int) -> list[set[_State]]:
    """Distinct (residual word, symbol) states reachable at each level
    0..n; the growth of these sets bounds the memoization cost."""
    frontier: set[_State] = {((), r.root_symbol)}
    out = [set(frontier)]
    for _ in range(n):
        nxt: set[_State] = set()
        for state in frontier:
            for _, child in _children(r, state):
                nxt.add(child)
        out.append(nxt)
        frontier = nxt
    return out


def conjugation_check(r: RecSystem, x: Element, y: Element, depth: int = 12) -> bool:
    """Whether r^-1 x r and y agree on every vertex of levels 1..depth."""
    return conjugation_disagreement_level(r, x, y, depth) is None


def conjugation_disagreement_level(
    r: RecSystem, x: Element, y: Element, depth: int = 12
) -> Optional[int]:
    """First level in 1..depth where r^-1 x r and y differ, or None.

    Level images of r are inverted as permutations, so the comparison is
    exact at each level even though r itself is not a group element.
    """
    if x.spec != r.spec or y.spec != r.spec:
        raise SpecMismatch("elements over a different spec")
    for n in range(1, depth + 1):
        Pr = rec_level_perm(r, n).images
        Px = level_perm(x, n).images
        Py = level_perm(y, n).images
        if not np.array_equal(invert_perm(Pr)[Px[Pr]], Py):
            return n
    return None
