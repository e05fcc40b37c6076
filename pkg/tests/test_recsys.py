import random

import numpy as np
import pytest

from selfsim import (
    RecEquation,
    RecSystem,
    b_letter,
    build_conjugator,
    conjugation_check,
    conjugation_disagreement_level,
    gen_a,
    gen_b,
    identity,
    level_perm,
    multiply,
    parse_word,
    power,
    rec_act_on_vertex,
    rec_level_perm,
    rec_state_sets,
)
from selfsim.errors import EvenQ, NoDihedralWitness, SpecMismatch


def test_build_conjugator_frozen(ge):
    r = build_conjugator(ge, 3)
    assert rec_act_on_vertex(r, "00") == "01"
    assert rec_act_on_vertex(r, "0000") == "0111"
    assert rec_level_perm(r, 2).images.tolist() == [1, 0, 2, 3]
    assert rec_level_perm(r, 3).images.tolist() == [3, 2, 1, 0, 5, 4, 6, 7]
    with pytest.raises(ValueError):
        rec_act_on_vertex(r, "02")


def test_conjugator_errors(ge, grig):
    with pytest.raises(EvenQ):
        build_conjugator(ge, 4)
    with pytest.raises(ValueError):
        build_conjugator(ge, 1)
    with pytest.raises(NoDihedralWitness):
        build_conjugator(grig, 3)


def test_conjugation_carries_line_pair(ge):
    a = gen_a(ge)
    b = b_letter(ge, (1, 1))
    for q in (3, 5):
        r = build_conjugator(ge, q)
        big = multiply(power(multiply(a, b), q), b)
        assert conjugation_check(r, big, a, depth=8)
        for x in (gen_b(ge, 0), gen_b(ge, 1), b):
            assert conjugation_check(r, x, x, depth=8)


def test_conjugation_disagreement(ge, grig):
    r = build_conjugator(ge, 3)
    a = gen_a(ge)
    # the root levels agree, the claim first breaks at level 2
    assert conjugation_disagreement_level(r, a, a, depth=6) == 2
    assert conjugation_check(r, identity(ge), identity(ge))
    with pytest.raises(SpecMismatch):
        conjugation_check(r, gen_a(grig), a)


def test_state_sets_stay_small(ge):
    for q in (3, 5, 7, 9):
        r = build_conjugator(ge, q)
        sizes = [len(s) for s in rec_state_sets(r, 10)]
        assert max(sizes) <= q
        assert sizes[6:] == [q] * len(sizes[6:])


def test_vertex_action_matches_level_perm(ge):
    rng = random.Random(41)
    for q in (3, 5):
        r = build_conjugator(ge, q)
        for n in (1, 3, 6):
            perm = rec_level_perm(r, n)
            for _ in range(10):
                v = "".join(str(rng.randrange(2)) for _ in range(n))
                img = rec_act_on_vertex(r, v)
                assert perm.images[int(v, 2)] == int(img, 2)


def test_rec_system_encodes_group_elements(ge):
    # sanity anchor: systems that spell out a and the witness letter give
    # exactly the level permutations of those elements
    one = identity(ge)
    eq_i = RecEquation(0, (one, one), ("I", "I"))
    eq_a = RecEquation(1, (one, one), ("I", "I"))
    sys_a = RecSystem(ge, {"I": eq_i, "A": eq_a}, "A")
    eq_b = RecEquation(0, (gen_a(ge), one), ("I", "B"))
    sys_b = RecSystem(ge, {"I": eq_i, "B": eq_b}, "B")
    for n in range(1, 7):
        assert np.array_equal(
            rec_level_perm(sys_a, n).images, level_perm(gen_a(ge), n).images
        )
        assert np.array_equal(
            rec_level_perm(sys_b, n).images,
            level_perm(b_letter(ge, (1, 1)), n).images,
        )


def test_rec_system_validation(ge, grig):
    one = identity(ge)
    good = RecEquation(0, (one, one), ("S", "S"))
    with pytest.raises(ValueError):
        RecSystem(ge, {"S": RecEquation(0, (one,), ("S",))}, "S")
    with pytest.raises(ValueError):
        RecSystem(ge, {"S": RecEquation(0, (one, one), ("S", "T"))}, "S")
    with pytest.raises(ValueError):
        RecSystem(ge, {"S": good}, "T")
    with pytest.raises(SpecMismatch):
        RecSystem(
            ge, {"S": RecEquation(0, (identity(grig), one), ("S", "S"))}, "S"
        )
