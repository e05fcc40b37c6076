"""Finite level quotients as exact permutation groups.

The image of the group on tree level n is a subgroup of Sym(p^n) (vertices
in lexicographic = numeric order).  This module evaluates generators into
level permutations with a vectorized transducer, then runs a deterministic
Schreier-Sims stabilizer chain over the natural base 0, 1, ..., N-1 to get
exact orders and membership.  Kernels of prefix actions (level stabilizers,
rigid stabilizers) are read off as chain tails after reordering the domain
so the points to be fixed come first.

Permutations are numpy int64 arrays `arr` with arr[i] = image of i; as
functions they compose by fancy indexing: (f o g)[i] = f[g[i]].
"""

from __future__ import annotations

import math
import random
from bisect import insort
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .core import GroupSpec, subspace_Bi
from .errors import (
    DegenerateCase,
    LevelMismatch,
    LevelTooLarge,
    StructureError,
)
from .elements import (
    Element,
    basis_gens,
    b_letter,
    commutator,
    gen_a,
    generating_set,
)

ENUMERATION_CAP = 1 << 20


class LevelPerm:
    """A permutation of the p^n level-n vertices."""

    __slots__ = ("n", "images")

    def __init__(self, n: int, images):
        self.n = n
        self.images = np.asarray(images, dtype=np.int64)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LevelPerm)
            and self.n == other.n
            and np.array_equal(self.images, other.images)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.images.tobytes()))

    def __repr__(self) -> str:
        return f"LevelPerm(n={self.n}, images={self.images.tolist()})"

    @property
    def degree(self) -> int:
        return len(self.images)

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.images == np.arange(len(self.images))))


def invert_perm(arr: np.ndarray) -> np.ndarray:
    out = np.empty_like(arr)
    out[arr] = np.arange(len(arr), dtype=arr.dtype)
    return out


def level_perm(x: Element, n: int) -> LevelPerm:
    """Exact permutation induced on level n, computed by applying each
    letter's transducer to the whole vertex array at once."""
    spec = x.spec
    p = spec.p
    if n < 0:
        raise ValueError("level must be >= 0")
    if p**n > ENUMERATION_CAP:
        raise LevelTooLarge(f"p^n = {p**n} exceeds the cap {ENUMERATION_CAP}")
    N = p**n
    V = np.arange(N, dtype=np.int64)
    if n == 0:
        return LevelPerm(0, V)
    for l in reversed(x.letters):
        if l < 0:
            e = -l
            top = V // (p ** (n - 1))
            V = ((top + e) % p) * (p ** (n - 1)) + V % (p ** (n - 1))
        else:
            code = l
            alive = np.ones(N, dtype=bool)
            for k in range(n):
                digit = (V // (p ** (n - 1 - k))) % p
                if k + 1 < n:
                    w = spec.omega_code[code]
                    if w:
                        exit0 = alive & (digit == 0)
                        if exit0.any():
                            step = p ** (n - 2 - k)
                            d1 = (V[exit0] // step) % p
                            V[exit0] += ((d1 + w) % p - d1) * step
                alive &= digit == (p - 1)
                if not alive.any():
                    break
                code = spec.rho_code[code]
    return LevelPerm(n, V)


# ---------------------------------------------------------------------------
# stabilizer chains


@dataclass
class SubgroupDesc:
    """Named generating set; if normal_closure is set the subgroup is the
    normal closure of the generators in the whole group."""

    name: str
    generators: list[Element]
    normal_closure: bool = False
    spec: Optional[GroupSpec] = None

    def __post_init__(self):
        specs = {g.spec for g in self.generators}
        if self.spec is None:
            if len(specs) != 1:
                raise StructureError("SubgroupDesc needs a spec (empty or mixed generators)")
            self.spec = next(iter(specs))
        elif specs and specs != {self.spec}:
            raise StructureError("generators do not match the declared spec")


class _Level:
    __slots__ = (
        "point",
        "transversal",
        "inv_transversal",
        "orbit",
        "gen_idxs",
        "pending",
        "checks",
    )

    def __init__(self, point: int, identity: np.ndarray):
        self.point = point
        self.transversal: dict[int, np.ndarray] = {point: identity}
        self.inv_transversal: dict[int, np.ndarray] = {point: identity}
        self.orbit: list[int] = [point]
        self.gen_idxs: list[int] = []
        self.pending: deque[tuple[int, int]] = deque()
        self.checks: deque[tuple[int, int]] = deque()


class PermChain:
    """Deterministic stabilizer chain with the natural base 0..N-1.

    Level k (materialized only when some strong generator moves k while
    fixing everything below) holds the fundamental orbit of point k under
    the strong generators whose first moved point is >= k, together with a
    transversal.  Sifting strips an element level by level; the element is
    in the group iff the residue is the identity.
    """

    def __init__(
        self,
        degree: int,
        n: Optional[int] = None,
        p: Optional[int] = None,
        target_order: Optional[int] = None,
    ):
        self.degree = degree
        self.n = n
        self.p = p
        self.identity = np.arange(degree, dtype=np.int64)
        self.strong_gens: list[np.ndarray] = []
        self.fmp: list[int] = []
        self.levels: dict[int, _Level] = {}
        self.target_order = target_order
        self._order_acc = 1
        self._complete = target_order == 1
        self._level_keys: list[int] = []
        self._rng = random.Random(0x5EED)
        self._mix: Optional[np.ndarray] = None

    # -- queries ------------------------------------------------------------

    def _first_moved(self, arr: np.ndarray) -> int:
        diff = np.nonzero(arr != self.identity)[0]
        return -1 if diff.size == 0 else int(diff[0])

    def sift(self, arr: np.ndarray) -> Optional[np.ndarray]:
        g = arr
        iden = self.identity
        levels = self.levels
        low = 0
        degree = self.degree
        while True:
            # The first moved point only increases along the walk, so each
            # scan starts where the previous one left off.
            seg = g[low:] != iden[low:]
            idx = int(seg.argmax())
            if not seg[idx]:
                return None
            v = low + idx
            lvl = levels.get(v)
            if lvl is None:
                return g
            u_inv = lvl.inv_transversal.get(int(g[v]))
            if u_inv is None:
                return g
            g = u_inv[g]
            low = v + 1
            if low >= degree:
                return None

    def member(self, perm: Union[LevelPerm, np.ndarray]) -> bool:
        if isinstance(perm, LevelPerm):
            if self.n is not None and perm.n != self.n:
                raise LevelMismatch(f"chain level {self.n}, permutation level {perm.n}")
            arr = perm.images
        else:
            arr = np.asarray(perm, dtype=np.int64)
        if len(arr) != self.degree:
            raise LevelMismatch("degree mismatch")
        return self.sift(arr) is None

    @property
    def order(self) -> int:
        return math.prod(len(lvl.orbit) for lvl in self.levels.values())

    # -- construction -------------------------------------------------------

    def insert(self, arr: np.ndarray) -> bool:
        """Sift; if a residue is left, install it and re-close the chain.
        Returns whether the group grew."""
        grew = self._feed(np.asarray(arr, dtype=np.int64))
        if not self._complete:
            self._process()
        return grew

    def _feed(self, arr: np.ndarray) -> bool:
        """Install the element's sift residue and extend orbits, leaving
        the Schreier closure for later; bulk loading feeds all known
        material first so the closure hunt starts from the richest chain."""
        r = self.sift(arr)
        if r is None:
            return False
        if self._complete:
            raise StructureError(
                "insert would grow a chain past its certified order"
            )
        self._install(r)
        self._extend_orbits()
        if self._complete:
            self._clear_queues()
        return True

    def _install(self, r: np.ndarray) -> None:
        v = self._first_moved(r)
        idx = len(self.strong_gens)
        self.strong_gens.append(r)
        self.fmp.append(v)
        created = v not in self.levels
        if created:
            lvl = _Level(v, self.identity)
            lvl.gen_idxs = [i for i, f in enumerate(self.fmp) if f >= v]
            for i in lvl.gen_idxs:
                lvl.pending.append((v, i))
            self.levels[v] = lvl
            insort(self._level_keys, v)
        for w in self._level_keys:
            if w > v or (created and w == v):
                continue
            lvl = self.levels[w]
            lvl.gen_idxs.append(idx)
            for pt in list(lvl.orbit):
                lvl.pending.append((pt, idx))

    def _clear_queues(self) -> None:
        for lvl in self.levels.values():
            lvl.pending.clear()
            lvl.checks.clear()

    def _extend_orbits(self) -> None:
        """Drain the unexplored (point, generator) pairs of every level.
        Pairs that land on a new point grow the orbit and transversal;
        pairs that land inside the orbit are parked for Schreier checking.
        No sifting happens here, so the orbit-size product reaches a given
        target with as little work as possible."""
        for v in reversed(self._level_keys):
            lvl = self.levels[v]
            transversal = lvl.transversal
            pending = lvl.pending
            while pending:
                pt, gi = pending.popleft()
                g = self.strong_gens[gi]
                img = int(g[pt])
                if img in transversal:
                    lvl.checks.append((pt, gi))
                    continue
                t = g[transversal[pt]]
                transversal[img] = t
                lvl.inv_transversal[img] = invert_perm(t)
                k = len(lvl.orbit)
                lvl.orbit.append(img)
                self._order_acc = self._order_acc // k * (k + 1)
                if self._order_acc == self.target_order:
                    self._complete = True
                    return
                for gj in lvl.gen_idxs:
                    pending.append((img, gj))

    def _random_candidate(self, length: int) -> np.ndarray:
        """Pseudo-random element of the current group: a running product
        that keeps absorbing randomly chosen strong generators and
        transversal representatives, so successive draws are ever longer
        words and mix through the group."""
        rng = self._rng
        u = self.strong_gens[rng.randrange(len(self.strong_gens))]
        for _ in range(length):
            lvl = self.levels[self._level_keys[rng.randrange(len(self._level_keys))]]
            pt = lvl.orbit[rng.randrange(len(lvl.orbit))]
            u = u[lvl.transversal[pt]]
        self._mix = u if self._mix is None else self._mix[u]
        return self._mix

    def _process(self) -> None:
        """Close the chain: alternate orbit extension sweeps with a hunt
        for missing strong generators.

        With a target order, the hunt sifts seeded-random products of the
        material already in the chain; any residue is a missing generator,
        and the orbit-size product reaching the target certifies
        completeness, at which point the parked Schreier pairs are dropped
        (each would sift to identity in a complete chain).  The systematic
        Schreier checks remain as a fallback so that progress never
        depends on the random draws, and they are the sole mechanism when
        no target is known, in which case draining them is what proves the
        chain complete."""
        while True:
            self._extend_orbits()
            if self._complete:
                self._clear_queues()
                return
            if self.target_order is not None and self.strong_gens:
                found = False
                for attempt in range(12):
                    r = self.sift(self._random_candidate(2 + attempt % 3))
                    if r is not None:
                        self._install(r)
                        found = True
                        break
                if found:
                    continue
            installed = False
            for v in reversed(self._level_keys):
                lvl = self.levels[v]
                checks = lvl.checks
                while checks:
                    pt, gi = checks.popleft()
                    g = self.strong_gens[gi]
                    img = int(g[pt])
                    u_img = lvl.transversal[img]
                    t = g[lvl.transversal[pt]]
                    if np.array_equal(t, u_img):
                        continue
                    r = self.sift(lvl.inv_transversal[img][t])
                    if r is not None:
                        self._install(r)
                        installed = True
                        break
                if installed:
                    break
            if not installed:
                return


def build_chain(
    arrays: Sequence[np.ndarray],
    degree: int,
    n: Optional[int] = None,
    p: Optional[int] = None,
    target_order: Optional[int] = None,
) -> PermChain:
    chain = PermChain(degree, n, p, target_order)
    for arr in arrays:
        if chain._complete:
            break
        chain._feed(np.asarray(arr, dtype=np.int64))
    if not chain._complete:
        chain._process()
    return chain


# ---------------------------------------------------------------------------
# group-level constructions


def group_desc(spec: GroupSpec) -> SubgroupDesc:
    return SubgroupDesc("G", generating_set(spec), False, spec)


_g_chain_cache: dict[tuple[GroupSpec, int], PermChain] = {}


def group_chain(spec: GroupSpec, n: int) -> PermChain:
    """Chain for the full level quotient, cached per (spec, n)."""
    key = (spec, n)
    found = _g_chain_cache.get(key)
    if found is None:
        found = chain_from(group_desc(spec), n)
        _g_chain_cache[key] = found
    return found


def chain_from(desc: SubgroupDesc, n: int) -> PermChain:
    """Chain of the level-n image of the described subgroup.

    Normal closures are computed inside Sym(p^n): the generator images are
    closed under conjugation by the level images of the whole group's
    generators until membership stabilizes.  This equals the image of the
    symbolic normal closure because taking level images is a homomorphism.
    """
    spec = desc.spec
    degree = spec.p**n
    if degree > ENUMERATION_CAP:
        raise LevelTooLarge(f"p^n = {degree} exceeds the cap {ENUMERATION_CAP}")
    gen_arrays = [level_perm(g, n).images for g in desc.generators]
    if not desc.normal_closure:
        target, seeds = tree_pivot_basis(gen_arrays, spec.p, n)
        chain = PermChain(degree, n, spec.p, target)
        for arr in gen_arrays + seeds:
            if chain._complete:
                break
            chain._feed(arr)
        if not chain._complete:
            chain._process()
        if chain.order != target:
            raise StructureError("chain closed below its certified order")
        return chain
    ambient = [level_perm(g, n).images for g in generating_set(spec)]
    target, seeds = tree_pivot_basis(gen_arrays, spec.p, n, conj_arrays=ambient)
    chain = PermChain(degree, n, spec.p, target)
    ambient_inv = [invert_perm(t) for t in ambient]
    work: deque[np.ndarray] = deque(gen_arrays)
    for arr in gen_arrays + seeds:
        if chain._complete:
            break
        chain._feed(arr)
    if not chain._complete:
        chain._process()
    while work and not chain._complete:
        s = work.popleft()
        for t, t_inv in zip(ambient, ambient_inv):
            c = t_inv[s[t]]
            if chain.insert(c):
                work.append(c)
    if chain.order != target:
        raise StructureError("chain closed below its certified order")
    return chain


def closure_order(perms: Sequence[LevelPerm]) -> int:
    """Brute-force product closure cardinality; the independent oracle for
    chain orders at small degree."""
    if not perms:
        return 1
    gens = [tuple(int(v) for v in perm.images) for perm in perms]
    degree = len(gens[0])
    ident = tuple(range(degree))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for f in frontier:
            for g in gens:
                h = tuple(f[g[i]] for i in range(degree))
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        frontier = nxt
    return len(seen)


# ---------------------------------------------------------------------------
# exact orders from leading block shifts


def _assert_cyclic_blocks(arr: np.ndarray, p: int, n: int) -> None:
    """Check that the permutation preserves the p-ary block partition at
    every depth and permutes each vertex's children by a cyclic shift, i.e.
    lies in the n-fold wreath power of Z/p."""
    for d in range(n):
        bs = p ** (n - d)
        cs = bs // p
        starts = np.arange(p**d, dtype=np.int64) * bs
        child_starts = (starts[:, None] + np.arange(p, dtype=np.int64) * cs).ravel()
        img = arr[child_starts].reshape(p**d, p)
        if not bool((img // bs == img[:, :1] // bs).all()):
            raise StructureError("permutation does not preserve the tree blocks")
        rel = (img % bs) // cs
        expect = (rel[:, :1] + np.arange(p, dtype=np.int64)) % p
        if not bool((rel == expect).all()):
            raise StructureError("children are not permuted by a cyclic shift")


def _label_tables(p: int, n: int):
    """Breadth-first vertex offsets per depth and the leaf start of each
    vertex's block, used to translate leaf permutations into per-vertex
    child-shift labels."""
    offsets = [0]
    for d in range(n):
        offsets.append(offsets[-1] + p**d)
    starts = [np.arange(p**d, dtype=np.int64) * p ** (n - d) for d in range(n)]
    return offsets, starts


def _leaf_to_labels(arr: np.ndarray, p: int, n: int, offsets, starts):
    """Label-vector view of a tree-respecting leaf permutation: the cyclic
    shift it applies to each vertex's children and the induced permutation
    of the vertices themselves, both indexed breadth-first."""
    lv = np.empty(offsets[n], dtype=np.int16)
    vp = np.empty(offsets[n], dtype=np.int64)
    for d in range(n):
        bs = p ** (n - d)
        img = arr[starts[d]]
        sl = slice(offsets[d], offsets[d + 1])
        vp[sl] = offsets[d] + img // bs
        lv[sl] = (img % bs) // (bs // p)
    return lv, vp


def tree_pivot_basis(
    gen_arrays: Sequence[np.ndarray],
    p: int,
    n: int,
    conj_arrays: Optional[Sequence[np.ndarray]] = None,
) -> tuple[int, list[np.ndarray]]:
    """Exact order and a triangular basis of the permutation group the
    arrays generate, assuming they respect the p-ary tree structure
    (checked).  With `conj_arrays` the subgroup is first closed under
    conjugation by those permutations, so the result describes a normal
    closure.

    The basis is keyed by tree vertices: each element's leading shift
    (first vertex moved, breadth-first) sits at a distinct vertex and is
    normalized to 1.  Incoming material is reduced by multiplying away
    leading shifts with basis powers; whatever survives becomes a new
    basis element and is closed against p-th powers, commutators with the
    existing basis, and the conjugators.  Once the work queue drains, the
    subgroups generated by basis tails form a chain with quotients of
    order exactly p (the tail elements all fix the next pivot vertex's
    shift), so the group order is p ** len(basis).

    All reduction happens in the label-vector view, where composing with
    a basis power is two fancy indexes over the vertex set and the next
    pivot is a single argmax; commutators of a fresh basis element with
    the whole existing basis are batched into a few matrix operations.
    Leaf permutations are rebuilt, by replaying the recorded reduction
    path, only for the elements that actually join the basis.  For p = 2
    the deepest vertex band is elementary abelian and holds roughly half
    the pivots, so material landing there is eliminated with bitset
    arithmetic and band pairs, which commute, are skipped outright.

    The order is the certificate that lets stabilizer chains stop their
    Schreier verification early; it is computed by entirely different
    means than the chain itself.  The basis elements double as seeds that
    hand the chain its deep levels cheaply."""
    gens = [np.asarray(a, dtype=np.int64) for a in gen_arrays]
    conj_leaf = [np.asarray(c, dtype=np.int64) for c in (conj_arrays or ())]
    for arr in gens + conj_leaf:
        _assert_cyclic_blocks(arr, p, n)
    offsets, starts = _label_tables(p, n)
    V = offsets[n]
    iden_v = np.arange(V, dtype=np.int64)
    conj_leaf_inv = [invert_perm(c) for c in conj_leaf]
    conj_pairs = []
    for c_leaf, c_leaf_inv in zip(conj_leaf, conj_leaf_inv):
        cl, cv = _leaf_to_labels(c_leaf, p, n, offsets, starts)
        cli, cvi = _leaf_to_labels(c_leaf_inv, p, n, offsets, starts)
        conj_pairs.append((cl, cv, cli, cvi))

    # one row per installed pivot vertex; the matrices let a new element's
    # commutators against the whole basis be formed in bulk
    LV = np.zeros((V, V), dtype=np.int16)
    VP = np.zeros((V, V), dtype=np.int64)
    LVI = np.zeros((V, V), dtype=np.int16)
    VPI = np.zeros((V, V), dtype=np.int64)
    TM = np.zeros((V, V), dtype=bool)
    key2row: dict[int, int] = {}
    row_pows: list[list] = []
    row_leaf: list[np.ndarray] = []
    row_leaf_inv: list[np.ndarray] = []
    row_leaf_pows: list[list] = []
    row_bvpi: list[np.ndarray] = []

    # the band of deepest vertices: for p = 2 its elements are plain bit
    # vectors (trivial vertex action), handled by integer xor elimination
    bottom0 = offsets[n - 1] if p == 2 else V
    nb = V - bottom0
    bot: dict[int, int] = {}
    botwork: deque = deque()
    conj_bvpi = []

    def compose(l1, v1, l2, v2):
        # product "first apply (l2, v2)": labels add at the image vertex
        if p == 2:
            return l1[v2] ^ l2, v1[v2]
        return (l1[v2] + l2) % p, v1[v2]

    def unpack_bits(bits):
        raw = bits.to_bytes((nb + 7) // 8, "little")
        out = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        return out[:nb]

    def pack_bits(mask):
        return int.from_bytes(np.packbits(mask, bitorder="little").tobytes(), "little")

    def install_bottom(pb, bits):
        bot[pb] = bits
        wb = unpack_bits(bits)
        for bvpi in row_bvpi:
            c = pack_bits(wb[bvpi])
            if c != bits:
                botwork.append(c)
        for bvpi in conj_bvpi:
            c = pack_bits(wb[bvpi])
            if c != bits:
                botwork.append(c)

    def reduce_bits(bits):
        while bits:
            pb = (bits & -bits).bit_length() - 1
            row = bot.get(pb)
            if row is None:
                install_bottom(pb, bits)
                return
            bits ^= row

    def replay_leaf(recipe, path):
        kind = recipe[0]
        if kind == "gen":
            arr = gens[recipe[1]]
        elif kind == "pow":
            base = row_leaf[recipe[1]]
            arr = base
            for _ in range(p - 1):
                arr = arr[base]
        elif kind == "comm":
            hr, cr = recipe[1], recipe[2]
            arr = row_leaf_inv[hr][row_leaf_inv[cr][row_leaf[hr][row_leaf[cr]]]]
        else:
            hr, j = recipe[1], recipe[2]
            arr = conj_leaf_inv[j][row_leaf[hr][conj_leaf[j]]]
        for ridx, m in path:
            arr = arr[row_leaf_pows[ridx][m]]
        return arr

    for _, _, _, cvi in conj_pairs:
        conj_bvpi.append(cvi[bottom0:] - bottom0)

    work: deque = deque()
    for i, arr in enumerate(gens):
        lv, vp = _leaf_to_labels(arr, p, n, offsets, starts)
        work.append((lv, vp, ("gen", i)))

    while work or botwork:
        if botwork:
            reduce_bits(botwork.popleft())
            continue
        lv, vp, recipe = work.popleft()
        path: list[tuple[int, int]] = []
        low = 0
        while low < V:
            seg = lv[low:] != 0
            j = int(seg.argmax())
            if not seg[j]:
                break
            idx = low + j
            if idx >= bottom0:
                reduce_bits(pack_bits(lv[bottom0:] != 0))
                break
            s = int(lv[idx])
            row = key2row.get(idx)
            if row is not None:
                m = p - s
                lpw, vpw = row_pows[row][m]
                lv, vp = compose(lv, vp, lpw, vpw)
                path.append((row, m))
                low = idx + 1
                continue
            # fresh pivot: normalize its shift to 1, then install
            t = pow(s, -1, p)
            hl, hv = lv, vp
            for _ in range(t - 1):
                hl, hv = compose(hl, hv, lv, vp)
            hvi = invert_perm(hv)
            hli = (-hl[hvi]) % p
            tm = (hl != 0) | (hv != iden_v)
            k = len(key2row)
            pows = [None, (hl, hv)]
            for _ in range(p - 2):
                pl, pv = pows[-1]
                pows.append(compose(pl, pv, hl, hv))
            base = replay_leaf(recipe, path)
            leaf = base
            for _ in range(t - 1):
                leaf = leaf[base]
            leaf_pows = [None, leaf]
            for _ in range(p - 2):
                leaf_pows.append(leaf_pows[-1][leaf])
            pl, pv = pows[p - 1]
            ql, qv = compose(pl, pv, hl, hv)
            if ql.any():
                work.append((ql, qv, ("pow", k)))
            if k:
                inter = np.flatnonzero((TM[:k] & tm).any(axis=1))
                if inter.size:
                    VPc = VP[inter]
                    t1v = hv[VPc]
                    t2v = np.take_along_axis(VPI[inter], t1v, axis=1)
                    t3v = hvi[t2v]
                    if p == 2:
                        t1l = hl[VPc] ^ LV[inter]
                        t2l = np.take_along_axis(LVI[inter], t1v, axis=1) ^ t1l
                        t3l = hli[t2v] ^ t2l
                    else:
                        t1l = (hl[VPc] + LV[inter]) % p
                        t2l = (np.take_along_axis(LVI[inter], t1v, axis=1) + t1l) % p
                        t3l = (hli[t2v] + t2l) % p
                    for r in np.flatnonzero((t3l != 0).any(axis=1)):
                        work.append(
                            (t3l[r].copy(), t3v[r].copy(), ("comm", k, int(inter[r])))
                        )
            for jx, (cl, cv, cli, cvi) in enumerate(conj_pairs):
                al, av = compose(hl, hv, cl, cv)
                al, av = compose(cli, cvi, al, av)
                if not (np.array_equal(al, hl) and np.array_equal(av, hv)):
                    work.append((al, av, ("conj", k, jx)))
            bvpi = hvi[bottom0:] - bottom0
            if bot:
                M = np.stack([unpack_bits(bot[pb]) for pb in sorted(bot)])
                CM = M[:, bvpi]
                for r in np.flatnonzero((CM != M).any(axis=1)):
                    botwork.append(pack_bits(CM[r]))
            LV[k] = hl
            VP[k] = hv
            LVI[k] = hli
            VPI[k] = hvi
            TM[k] = tm
            key2row[idx] = k
            row_pows.append(pows)
            row_leaf.append(leaf)
            row_leaf_inv.append(invert_perm(leaf))
            row_leaf_pows.append(leaf_pows)
            row_bvpi.append(bvpi)
            break
    order = p ** (len(key2row) + len(bot))
    seeds = [row_leaf[key2row[key]] for key in sorted(key2row)]
    if bot:
        iden_leaf = np.arange(p**n, dtype=np.int64)
        for pb in sorted(bot):
            flips = unpack_bits(bot[pb]).astype(np.int64)
            seeds.append(iden_leaf ^ np.repeat(flips, 2))
    return order, seeds


def tree_group_order(
    gen_arrays: Sequence[np.ndarray],
    p: int,
    n: int,
    conj_arrays: Optional[Sequence[np.ndarray]] = None,
) -> int:
    """Order of the group the arrays generate (the normal closure, with
    `conj_arrays`); see tree_pivot_basis."""
    return tree_pivot_basis(gen_arrays, p, n, conj_arrays)[0]


def _commutator_arrays(arrs: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Nontrivial commutators of every unordered pair, skipping pairs with
    disjoint support (they commute outright)."""
    out: list[np.ndarray] = []
    if not arrs:
        return out
    iden = np.arange(len(arrs[0]), dtype=np.int64)
    invs = [invert_perm(x) for x in arrs]
    masks = [x != iden for x in arrs]
    for i, x in enumerate(arrs):
        for j in range(i + 1, len(arrs)):
            if not bool(np.any(masks[i] & masks[j])):
                continue
            c = invs[i][invs[j][x[arrs[j]]]]
            if not np.array_equal(c, iden):
                out.append(c)
    return out


def _closure_under_conjugation(
    seeds: Sequence[np.ndarray],
    conj_gens: Sequence[np.ndarray],
    degree: int,
    n: Optional[int],
    p: Optional[int],
) -> PermChain:
    target = None
    basis_seeds: list[np.ndarray] = []
    if p is not None and n is not None and degree == p**n:
        target, basis_seeds = tree_pivot_basis(
            list(seeds), p, n, conj_arrays=list(conj_gens)
        )
    chain = PermChain(degree, n, p, target)
    conj_inv = [invert_perm(t) for t in conj_gens]
    work: deque[np.ndarray] = deque()
    for s in seeds:
        if chain._complete:
            break
        if chain._feed(np.asarray(s, dtype=np.int64)):
            work.append(s)
    for s in basis_seeds:
        if chain._complete:
            break
        chain._feed(s)
    if not chain._complete:
        chain._process()
    while work and not chain._complete:
        s = work.popleft()
        for t, t_inv in zip(conj_gens, conj_inv):
            c = t_inv[s[t]]
            if chain.insert(c):
                work.append(c)
    return chain


def derived_chain(
    chain: PermChain,
    gens: Sequence[Union[LevelPerm, np.ndarray]],
    n: int,
    k: int = 1,
) -> PermChain:
    """k-th derived subgroup of the finite image generated by `gens`.

    Each round takes commutators of the current generating set as seeds
    and closes them under conjugation by the original generators.  That
    gives the same subgroup as closing within the current term, because
    every derived term is normal in the starting group, and it keeps the
    conjugating set small across rounds.
    """
    if k < 1:
        raise ValueError("derivation depth must be >= 1")
    ambient = [
        g.images if isinstance(g, LevelPerm) else np.asarray(g, dtype=np.int64)
        for g in gens
    ]
    cur = ambient
    out = chain
    for _ in range(k):
        comms = _commutator_arrays(cur)
        out = _closure_under_conjugation(comms, ambient, chain.degree, chain.n, chain.p)
        cur = list(out.strong_gens)
        if not cur:
            break
    return out


# ---------------------------------------------------------------------------
# kernels of prefix actions


def _prefix_kernel_gens(
    spec: GroupSpec, ell: int, n: int
) -> tuple[list[np.ndarray], int]:
    """Generators (as level-n permutations) of the kernel of the map from
    the level-n image onto the level-ell image, together with the kernel's
    order.

    Build a chain on the disjoint union of levels ell and n with the
    level-ell points first; strong generators fixing that whole block are
    exactly the kernel, and the product of the tail orbit sizes is its
    order.
    """
    p = spec.p
    small = p**ell
    big = p**n
    if small + big > ENUMERATION_CAP * 2:
        raise LevelTooLarge("combined domain too large")
    combined = []
    for g in generating_set(spec):
        lo = level_perm(g, ell).images
        hi = level_perm(g, n).images
        combined.append(np.concatenate([lo, hi + small]))
    chain = build_chain(combined, small + big)
    kernel = [
        sg[small:] - small for sg, f in zip(chain.strong_gens, chain.fmp) if f >= small
    ]
    order = math.prod(
        len(lvl.orbit) for v, lvl in chain.levels.items() if v >= small
    )
    return kernel, order


@dataclass(frozen=True)
class StabDerivedEntry:
    stab_level: int
    derivation: int
    stabilizer_order: int
    derived_order: int
    contained: bool


@dataclass(frozen=True)
class StabDerivedReport:
    p: int
    m: int
    n: int
    entries: tuple[StabDerivedEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.contained for e in self.entries)


def stab_in_derived_check(spec: GroupSpec, n: int) -> StabDerivedReport:
    """Finite-level congruence checks: the image of the level-(m+1)
    stabilizer lies in the derived image; for odd p additionally the
    level-(m+3) stabilizer image lies in the second derived image.

    These are exact necessary conditions at level n for the group-level
    inclusions (level images of stabilizers surject onto the kernels
    between finite levels).
    """
    if spec.is_degenerate:
        raise DegenerateCase("(2, 1) is excluded from the congruence checks")
    checks = [(spec.m + 1, 1)]
    if spec.p > 2:
        checks.append((spec.m + 3, 2))
    for ell, _ in checks:
        if n <= ell:
            raise ValueError(f"need n > {ell} for this spec")
    chain = group_chain(spec, n)
    gen_arrays = [level_perm(g, n).images for g in generating_set(spec)]
    entries = []
    for ell, depth in checks:
        derived = derived_chain(chain, gen_arrays, n, depth)
        kernel_gens, kernel_order = _prefix_kernel_gens(spec, ell, n)
        contained = all(derived.member(kg) for kg in kernel_gens)
        entries.append(
            StabDerivedEntry(ell, depth, kernel_order, derived.order, contained)
        )
    return StabDerivedReport(spec.p, spec.m, n, tuple(entries))


def rigid_stab_level(chainG: PermChain, v: Union[str, Sequence[int]], n: int) -> PermChain:
    """Subgroup of the chain's group supported on the level-n descendants
    of vertex v: the kernel of the action on all points outside that block,
    computed by reordering the domain so outside points come first."""
    p = chainG.p
    if p is None:
        raise StructureError("chain carries no alphabet size")
    digits = [int(ch) for ch in v] if isinstance(v, str) else [int(c) for c in v]
    depth = len(digits)
    if depth >= n and depth > 0:
        raise ValueError("vertex must be shallower than the level")
    if chainG.degree != p**n:
        raise LevelMismatch("chain degree does not match p^n")
    if depth == 0:
        return chainG
    v_int = 0
    for d in digits:
        v_int = v_int * p + d
    block = p ** (n - depth)
    start = v_int * block
    N = p**n
    relab = np.empty(N, dtype=np.int64)
    outside = np.concatenate([np.arange(0, start), np.arange(start + block, N)])
    relab[outside] = np.arange(N - block)
    relab[start : start + block] = np.arange(N - block, N)
    relab_inv = invert_perm(relab)
    relabeled = []
    for g in chainG.strong_gens:
        h = np.empty(N, dtype=np.int64)
        h[relab] = relab[g]
        relabeled.append(h)
    reordered = build_chain(relabeled, N)
    boundary = N - block
    kernel = [
        relab_inv[sg[relab]]
        for sg, f in zip(reordered.strong_gens, reordered.fmp)
        if f >= boundary
    ]
    return build_chain(kernel, N, chainG.n, p)


def project_to_subtree(
    chain_or_gens: Union[PermChain, Sequence[np.ndarray]],
    v: Union[str, Sequence[int]],
    n: int,
    p: int,
) -> list[np.ndarray]:
    """Restrict permutations supported on the subtree below v to that
    block, as permutations of p^(n - |v|) points."""
    gens = (
        chain_or_gens.strong_gens
        if isinstance(chain_or_gens, PermChain)
        else list(chain_or_gens)
    )
    digits = [int(ch) for ch in v] if isinstance(v, str) else [int(c) for c in v]
    depth = len(digits)
    v_int = 0
    for d in digits:
        v_int = v_int * p + d
    block = p ** (n - depth)
    start = v_int * block
    out = []
    for g in gens:
        seg = g[start : start + block] - start
        if seg.min() < 0 or seg.max() >= block:
            raise StructureError("permutation is not supported on the subtree")
        out.append(seg)
    return out


# ---------------------------------------------------------------------------
# branch and density checks


def branch_group_desc(spec: GroupSpec) -> SubgroupDesc:
    """The branching subgroup: for p = 2 (m >= 2) the normal closure of the
    commutators of a with the letters of rho(ker omega); for odd p the
    derived subgroup as a normal closure of generator commutators."""
    if spec.is_degenerate:
        raise DegenerateCase("(2, 1) has no branching subgroup here")
    a = gen_a(spec)
    if spec.p == 2:
        rows = subspace_Bi(spec, 1).basis
        gens = [commutator(a, b_letter(spec, row)) for row in rows]
        return SubgroupDesc("K", gens, True, spec)
    gens = [commutator(a, x) for x in basis_gens(spec)]
    return SubgroupDesc("Gprime", gens, True, spec)


def branch_pair_check(spec: GroupSpec, n: int) -> bool:
    """For each defining generator k of the branching subgroup, embed its
    level-(n-1) permutation into one child subtree (identity elsewhere) and
    test membership in the subgroup's level-n image; true iff all p slots
    of all generators pass."""
    if n < 1:
        raise ValueError("need n >= 1")
    desc = branch_group_desc(spec)
    chain = chain_from(desc, n)
    p = spec.p
    block = p ** (n - 1)
    for k in desc.generators:
        small = level_perm(k, n - 1).images
        for slot in range(p):
            embedded = np.arange(p**n, dtype=np.int64)
            embedded[slot * block : (slot + 1) * block] = small + slot * block
            if not chain.member(embedded):
                return False
    return True


def density_check(spec: GroupSpec, H: SubgroupDesc, n: int) -> bool:
    """Whether the level-n images of H and of the whole group coincide:
    equal chain orders and every group generator sifts into H's chain."""
    chainG = group_chain(spec, n)
    chainH = chain_from(H, n)
    if chainH.order != chainG.order:
        return False
    return all(chainH.member(level_perm(g, n)) for g in generating_set(spec))


def chain_summary_records(chain: PermChain) -> list[str]:
    """Line-delimited summary: degree, order, strong generator count, then
    one record per materialized base point."""
    lines = [
        f"degree={chain.degree}",
        f"order={chain.order}",
        f"strong_generators={len(chain.strong_gens)}",
    ]
    for v in sorted(chain.levels):
        lines.append(f"base={v} orbit={len(chain.levels[v].orbit)}")
    return lines
