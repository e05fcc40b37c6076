"""Dynamics on the boundary of the tree, restricted to eventually periodic
rays.

A ray is an infinite word over {0, ..., p-1} of the form u v v v ...; the
pair (u, v) is kept in a canonical form (primitive period, shortest
preperiod) so that equality is structural.  Generator letters act as finite
state transducers whose states stay inside B, so eventually periodic rays
stay eventually periodic and the action is computed exactly with cycle
detection.

The module also builds Schreier balls of the orbit of the all-ones ray,
the bijection n -> (ab)^n applied to that ray, the induced action on
integers, and the properness certificate for the subgroups generated by
(ab)^q together with B.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .core import GroupSpec, dihedral_witness
from .errors import EvenQ, NoDihedralWitness, NotInOrbit, StructureError
from .elements import Element

Digits = tuple[int, ...]


def _to_digits(w: Union[str, Sequence[int]]) -> Digits:
    if isinstance(w, str):
        return tuple(int(ch) for ch in w)
    return tuple(int(c) for c in w)


def _primitive(per: Digits) -> Digits:
    """Shortest word whose repetition gives the same infinite tail
    (classic failure-function primitivity test)."""
    n = len(per)
    fail = [0] * n
    k = 0
    for i in range(1, n):
        while k and per[i] != per[k]:
            k = fail[k - 1]
        if per[i] == per[k]:
            k += 1
        fail[i] = k
    period = n - fail[n - 1]
    if n % period == 0:
        return per[:period]
    return per


@dataclass(frozen=True)
class Ray:
    """Canonical eventually periodic ray pre + per^infinity."""

    pre: Digits
    per: Digits

    def __str__(self) -> str:
        return ray_str(self)


def make_ray(pre: Union[str, Sequence[int]], per: Union[str, Sequence[int]]) -> Ray:
    pre_d = _to_digits(pre)
    per_d = _to_digits(per)
    if not per_d:
        raise ValueError("period must be nonempty")
    per_d = _primitive(per_d)
    pre_l = list(pre_d)
    per_l = list(per_d)
    # Absorb preperiod characters that merely repeat the period's tail.
    while pre_l and pre_l[-1] == per_l[-1]:
        per_l = [per_l[-1]] + per_l[:-1]
        pre_l.pop()
    return Ray(tuple(pre_l), tuple(per_l))


def ray_str(r: Ray) -> str:
    sep = "" if all(d < 10 for d in r.pre + r.per) else ","
    return sep.join(str(d) for d in r.pre) + "(" + sep.join(str(d) for d in r.per) + ")"


def ray_equal(r1: Ray, r2: Ray) -> bool:
    """Rays constructed by make_ray / act_ray are canonical, so this is
    structural equality."""
    return r1 == r2


def all_ones(spec: GroupSpec) -> Ray:
    if spec.p < 2:
        raise StructureError("invalid spec")
    return make_ray((), (1,))


def _ray_char(r: Ray, i: int) -> int:
    if i < len(r.pre):
        return r.pre[i]
    return r.per[(i - len(r.pre)) % len(r.per)]


def _ray_suffix(r: Ray, k: int) -> Ray:
    """The ray starting at position k (not canonicalized; callers finish
    with make_ray)."""
    if k <= len(r.pre):
        return Ray(r.pre[k:], r.per)
    ph = (k - len(r.pre)) % len(r.per)
    return Ray((), r.per[ph:] + r.per[:ph])


def _act_a_power(p: int, e: int, r: Ray) -> Ray:
    e %= p
    if e == 0:
        return r
    pre = list(r.pre) if r.pre else list(r.per)
    per = r.per
    pre[0] = (pre[0] + e) % p
    return make_ray(pre, per)


def _act_b_code(spec: GroupSpec, code: int, r: Ray) -> Ray:
    """Run the transducer of a B-letter along the ray.

    While reading p-1 the state advances through rho; the first other
    character decides the exit: a 0 routes the accumulated a-exponent onto
    the next character, anything else acts trivially from there on.  If the
    walk enters the periodic part and revisits a (state, phase) pair it
    will never exit, and the ray is fixed from the repeat point on.
    """
    p = spec.p
    out: list[int] = []
    seen: dict[tuple[int, int], int] = {}
    i = 0
    while True:
        if i >= len(r.pre):
            phase = (i - len(r.pre)) % len(r.per)
            key = (code, phase)
            if key in seen:
                j = seen[key]
                return make_ray(tuple(out[:j]), tuple(out[j:]))
            seen[key] = len(out)
        c = _ray_char(r, i)
        if c == p - 1:
            out.append(c)
            code = spec.rho_code[code]
            i += 1
            continue
        out.append(c)
        suffix = _ray_suffix(r, i + 1)
        if c == 0:
            w = spec.omega_code[code]
            if w:
                suffix = _act_a_power(p, w, suffix)
        return make_ray(tuple(out) + suffix.pre, suffix.per)


def act_ray(x: Element, r: Ray) -> Ray:
    """Image of the ray under x; rightmost letter acts first."""
    spec = x.spec
    for d in r.pre + r.per:
        if not 0 <= d < spec.p:
            raise ValueError(f"ray digit {d} out of range for p = {spec.p}")
    for l in reversed(x.letters):
        if l < 0:
            r = _act_a_power(spec.p, -l, r)
        else:
            r = _act_b_code(spec, l, r)
    return r


# ---------------------------------------------------------------------------
# Schreier balls


@dataclass
class SchreierBall:
    center: Ray
    radius: int
    vertices: list[Ray]
    edges: list[tuple[int, int, str]]
    distances: list[int] = field(default_factory=list)


def _default_gens(spec: GroupSpec) -> tuple[list[tuple[str, Element]], bool]:
    """Generator list for ball BFS.

    When a dihedral witness exists the orbital graph collapses onto the
    two-generator graph of a and b (every other B-letter acts on each orbit
    ray either trivially or exactly like b); in that case we BFS over
    (a, b) and re-verify the collapse for every vertex encountered.
    Without a witness the full set {a} with all nonzero B-letters is used.
    """
    from .elements import b_letter, gen_a, word_str

    wit = dihedral_witness(spec) if spec.p == 2 else None
    if wit is not None:
        return [("a", gen_a(spec)), ("b", b_letter(spec, wit))], True
    gens: list[tuple[str, Element]] = [("a", gen_a(spec))]
    for code in range(1, spec.pm):
        x = Element(spec, (code,))
        gens.append((word_str(x), x))
    return gens, False


def schreier_ball(
    spec: GroupSpec,
    center: Ray,
    radius: int,
    gens: Optional[list[tuple[str, Element]]] = None,
) -> SchreierBall:
    """BFS ball of the orbit graph around `center`.

    Vertices appear in BFS order; edges are undirected and recorded once
    per (pair, label), loops included.  Non-loop edges are expanded only
    from vertices at distance < radius, so the ball is the BFS tree plus
    all back edges; loops are recorded for every vertex.
    """
    from .elements import invert

    if radius < 0:
        raise ValueError("radius must be >= 0")
    verify_collapse = False
    if gens is None:
        gens, verify_collapse = _default_gens(spec)
    center = make_ray(center.pre, center.per)
    vertices: list[Ray] = [center]
    index: dict[Ray, int] = {center: 0}
    distances = [0]
    edges: list[tuple[int, int, str]] = []
    edge_seen: set[tuple[int, int, str]] = set()
    queue = [0]
    head = 0
    while head < len(queue):
        vi = queue[head]
        head += 1
        v = vertices[vi]
        if verify_collapse:
            _assert_collapse(spec, v)
        for label, g in gens:
            images = [act_ray(g, v)]
            back = act_ray(invert(g), v)
            if back != images[0]:
                images.append(back)
            for img in images:
                if img == v:
                    key = (vi, vi, label)
                    if key not in edge_seen:
                        edge_seen.add(key)
                        edges.append(key)
                    continue
                if distances[vi] >= radius:
                    continue
                j = index.get(img)
                if j is None:
                    j = len(vertices)
                    index[img] = j
                    vertices.append(img)
                    distances.append(distances[vi] + 1)
                    queue.append(j)
                key = (min(vi, j), max(vi, j), label)
                if key not in edge_seen:
                    edge_seen.add(key)
                    edges.append(key)
    return SchreierBall(center, radius, vertices, edges, distances)


def _assert_collapse(spec: GroupSpec, v: Ray) -> None:
    """Check that every B-letter moves v either nowhere or exactly where
    the dihedral witness does."""
    wit = dihedral_witness(spec)
    if wit is None:
        return
    from .elements import b_letter

    b_img = act_ray(b_letter(spec, wit), v)
    for code in range(1, spec.pm):
        img = act_ray(Element(spec, (code,)), v)
        if img != v and img != b_img:
            raise StructureError(
                f"B-letter {code} moves {ray_str(v)} to {ray_str(img)}, "
                f"neither fixed nor the witness image {ray_str(b_img)}"
            )


def dot_export(ball: SchreierBall) -> str:
    """Render as an undirected DOT graph; node order is BFS order, labels
    are preperiod(period)."""
    lines = ["graph schreier {"]
    for i, v in enumerate(ball.vertices):
        lines.append(f'  n{i} [label="{ray_str(v)}"];')
    for i, j, label in ball.edges:
        lines.append(f'  n{i} -- n{j} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# the integer parametrization of the orbit of the all-ones ray


def _witness_pair(spec: GroupSpec) -> tuple[Element, Element]:
    from .elements import b_letter, gen_a

    wit = dihedral_witness(spec) if spec.p == 2 else None
    if wit is None:
        raise NoDihedralWitness("spec has no letter with recursion b = (a, b)")
    return gen_a(spec), b_letter(spec, wit)


def zeta(spec: GroupSpec, n: int) -> Ray:
    """The ray (ab)^n applied to the all-ones ray; cached incrementally."""
    a, b = _witness_pair(spec)
    pos = spec._zeta_pos
    neg = spec._zeta_neg
    if not pos:
        pos.append(all_ones(spec))
    if not neg:
        neg.append(all_ones(spec))
    if n >= 0:
        while len(pos) <= n:
            r = pos[-1]
            pos.append(act_ray(a, act_ray(b, r)))
        return pos[n]
    k = -n
    while len(neg) <= k:
        r = neg[-1]
        # (ab)^-1 = b^-1 a^-1 = b a for involutions a, b.
        neg.append(act_ray(b, act_ray(a, r)))
    return neg[k]


DEFAULT_ORBIT_SEARCH_BOUND = 10**4


def zeta_inv(spec: GroupSpec, r: Ray, bound: int = DEFAULT_ORBIT_SEARCH_BOUND) -> int:
    """The unique n with zeta(n) = r, found by outward search
    0, 1, -1, 2, -2, ...; NotInOrbit past the bound."""
    r = make_ray(r.pre, r.per)
    if r == zeta(spec, 0):
        return 0
    for k in range(1, bound + 1):
        if zeta(spec, k) == r:
            return k
        if zeta(spec, -k) == r:
            return -k
    raise NotInOrbit(f"ray {ray_str(r)} not found within |n| <= {bound}")


def z_action(x: Element, n: int, bound: int = DEFAULT_ORBIT_SEARCH_BOUND) -> int:
    """The action of x on the integer parametrization of the orbit."""
    return zeta_inv(x.spec, act_ray(x, zeta(x.spec, n)), bound)


# ---------------------------------------------------------------------------
# properness certificate


@dataclass(frozen=True)
class CertCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class PropernessReport:
    q: int
    status: str  # "PASS", "FAIL", or "NOT_PROPER_H1"
    checks: tuple[CertCheck, ...]
    witness: str

    @property
    def passed(self) -> bool:
        return self.status == "PASS"


def certificate_sample(q: int) -> list[int]:
    """The documented sample set: 0 and +-1..+-3q."""
    out = [0]
    for k in range(1, 3 * q + 1):
        out.append(k)
        out.append(-k)
    return out


def hq_properness_certificate(spec: GroupSpec, q: int) -> PropernessReport:
    """Certify that the subgroup generated by (ab)^q and B moves 0 only
    inside q*Z on the integer orbit, while ab moves 0 to 1; for odd q >= 3
    and 1 not divisible by q this witnesses a proper subgroup.

    For q = 1 all checks run but the conclusion is NOT_PROPER_H1 (the
    subgroup is everything).
    """
    if q < 1 or q % 2 == 0:
        raise EvenQ(f"q must be odd and >= 1, got {q}")
    a, b = _witness_pair(spec)
    from .elements import basis_gens, multiply, power, word_str

    ab_q = power(multiply(a, b), q)
    sample = certificate_sample(q)
    checks: list[CertCheck] = []

    ok = all(z_action(ab_q, n) == n + q for n in sample)
    checks.append(
        CertCheck(
            "shift_by_q",
            ok,
            f"(ab)^{q} sends n to n+{q} on all {len(sample)} samples",
        )
    )
    for i, x in enumerate(basis_gens(spec)):
        okx = all(z_action(x, n) in (n, -n) for n in sample)
        checks.append(
            CertCheck(
                f"basis_{word_str(x)}_sign",
                okx,
                f"{word_str(x)} sends n to n or -n on all samples",
            )
        )
    okb = all(z_action(b, n) == -n for n in sample)
    checks.append(CertCheck("witness_negates", okb, "b sends n to -n on all samples"))

    orbit_ok = all(c.passed for c in checks)
    checks.append(
        CertCheck(
            "orbit_of_0_in_qZ",
            orbit_ok,
            "generators move 0 within multiples of q, so the whole orbit of 0 stays there",
        )
    )
    moved = z_action(multiply(a, b), 0)
    checks.append(
        CertCheck("ab_moves_0", moved == 1, f"z_action(ab, 0) = {moved}")
    )
    witness = f"z_action(ab,0)={moved}"
    if not (orbit_ok and moved == 1):
        return PropernessReport(q, "FAIL", tuple(checks), witness)
    if moved % q == 0:
        return PropernessReport(
            q, "NOT_PROPER_H1", tuple(checks), witness + f" lies in {q}Z"
        )
    return PropernessReport(q, "PASS", tuple(checks), witness + f" not in {q}Z")
