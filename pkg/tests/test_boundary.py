import random

import pytest

from selfsim import (
    Ray,
    act_ray,
    all_ones,
    b_letter,
    dot_export,
    gen_a,
    gen_b,
    generating_set,
    hq_properness_certificate,
    identity,
    invert,
    make_ray,
    multiply,
    parse_word,
    ray_str,
    schreier_ball,
    z_action,
    zeta,
    zeta_inv,
)
from selfsim.boundary import certificate_sample
from selfsim.errors import EvenQ, NoDihedralWitness, NotInOrbit


def test_make_ray_canonical():
    assert make_ray("", "0101") == Ray((), (0, 1))
    assert make_ray("0", "10") == Ray((), (0, 1))
    assert make_ray("1", "1") == Ray((), (1,))
    assert make_ray("011", "1") == Ray((0,), (1,))
    assert make_ray("01", "10") == Ray((0, 1), (1, 0))
    assert ray_str(make_ray("01", "10")) == "01(10)"
    assert ray_str(all_ones(make_spec_cache())) == "(1)"
    with pytest.raises(ValueError):
        make_ray("0", "")


def make_spec_cache():
    from selfsim import make_spec

    return make_spec(2, [1, 0])


def test_act_ray_frozen(ge):
    ones = all_ones(ge)
    b = b_letter(ge, (1, 1))
    assert act_ray(b, ones) == ones
    assert ray_str(act_ray(gen_a(ge), ones)) == "0(1)"
    assert ray_str(act_ray(b, make_ray("0", "1"))) == "00(1)"
    # the second basis letter agrees with the witness on this ray
    assert ray_str(act_ray(gen_b(ge, 1), make_ray("0", "1"))) == "00(1)"
    # the first basis letter acts by a sign on the orbit line: it fixes
    # rays it exits in the zero-output state and negates the others
    b0 = gen_b(ge, 0)
    for n in range(-6, 7):
        assert act_ray(b0, zeta(ge, n)) in (zeta(ge, n), zeta(ge, -n))
    assert act_ray(b0, zeta(ge, 1)) == zeta(ge, 1)
    assert act_ray(b0, zeta(ge, 2)) == zeta(ge, -2)
    with pytest.raises(ValueError):
        act_ray(gen_a(ge), make_ray("2", "1"))


def test_act_ray_composition(ge, grig, fg):
    rng = random.Random(21)
    for spec in (ge, grig, fg):
        gens = generating_set(spec)
        for _ in range(40):
            x = identity(spec)
            y = identity(spec)
            for _ in range(rng.randrange(0, 8)):
                x = multiply(x, rng.choice(gens))
            for _ in range(rng.randrange(0, 8)):
                y = multiply(y, rng.choice(gens))
            pre = [rng.randrange(spec.p) for _ in range(rng.randrange(0, 4))]
            per = [rng.randrange(spec.p) for _ in range(rng.randrange(1, 4))]
            r = make_ray(pre, per)
            img = act_ray(multiply(x, y), r)
            assert img == act_ray(x, act_ray(y, r))
            # images come out canonical
            assert make_ray(img.pre, img.per) == img
            # and the inverse undoes the action
            assert act_ray(invert(x), act_ray(x, r)) == r


def test_zeta_frozen(ge):
    table = {0: "(1)", 1: "0(1)", -1: "00(1)", 2: "10(1)", -2: "100(1)", 3: "000(1)"}
    for n, s in table.items():
        assert ray_str(zeta(ge, n)) == s
    for n in range(-12, 13):
        assert zeta_inv(ge, zeta(ge, n)) == n


def test_z_action_frozen(ge):
    a = gen_a(ge)
    b = b_letter(ge, (1, 1))
    ab = multiply(a, b)
    for n in range(-8, 9):
        assert z_action(ab, n) == n + 1
        assert z_action(b, n) == -n
        assert z_action(a, n) == 1 - n
    assert z_action(parse_word(ge, "(aB<1,1>)^3"), 0) == 3


def test_zeta_requires_witness(grig, fg):
    for spec in (grig, fg):
        with pytest.raises(NoDihedralWitness):
            zeta(spec, 1)


def test_not_in_orbit(ge):
    with pytest.raises(NotInOrbit):
        zeta_inv(ge, make_ray("", "0"), bound=50)


def test_ball_is_path(ge):
    for radius in (1, 2, 5, 8):
        ball = schreier_ball(ge, all_ones(ge), radius)
        assert len(ball.vertices) == radius + 1
        assert ball.distances == list(range(radius + 1))
        loops = [e for e in ball.edges if e[0] == e[1]]
        assert loops == [(0, 0, "b")]
        path = sorted(e for e in ball.edges if e[0] != e[1])
        assert [(i, j) for i, j, _ in path] == [(i, i + 1) for i in range(radius)]
        assert [label for _, _, label in path] == [
            "a" if i % 2 == 0 else "b" for i in range(radius)
        ]
        # BFS order interleaves the two ends of the parametrized line
        for k in range(1, radius // 2 + 1):
            assert ball.vertices[2 * k - 1] == zeta(ge, k)
            assert ball.vertices[2 * k] == zeta(ge, -k)


def test_ball_distances_match_parametrization(ge):
    ball = schreier_ball(ge, all_ones(ge), 16)
    index = {v: i for i, v in enumerate(ball.vertices)}
    for n in range(1, 9):
        assert ball.distances[index[zeta(ge, n)]] == 2 * n - 1
    for n in range(-8, 1):
        assert ball.distances[index[zeta(ge, n)]] == -2 * n
    with pytest.raises(ValueError):
        schreier_ball(ge, all_ones(ge), -1)


def test_dot_export_frozen(ge):
    ball = schreier_ball(ge, all_ones(ge), 2)
    assert dot_export(ball) == (
        "graph schreier {\n"
        '  n0 [label="(1)"];\n'
        '  n1 [label="0(1)"];\n'
        '  n2 [label="00(1)"];\n'
        "  n0 -- n1 [label=\"a\"];\n"
        "  n0 -- n0 [label=\"b\"];\n"
        "  n1 -- n2 [label=\"b\"];\n"
        "}\n"
    )


def test_ball_without_witness(grig):
    # no dihedral witness: BFS runs over a and every nonzero B-letter
    ball = schreier_ball(grig, all_ones(grig), 1)
    assert len(ball.vertices) == 2
    labels = {label for i, j, label in ball.edges if i == j == 0}
    assert labels == {"b0", "b1", "B<1,1>"}


def test_certificate_sample():
    s = certificate_sample(3)
    assert s[0] == 0
    assert len(s) == 19
    assert set(s) == set(range(-9, 10))


def test_properness_certificate(ge, grig):
    for q in (3, 5):
        rep = hq_properness_certificate(ge, q)
        assert rep.status == "PASS"
        assert rep.passed
        assert all(c.passed for c in rep.checks)
    rep1 = hq_properness_certificate(ge, 1)
    assert rep1.status == "NOT_PROPER_H1"
    assert not rep1.passed
    with pytest.raises(EvenQ):
        hq_properness_certificate(ge, 4)
    with pytest.raises(NoDihedralWitness):
        hq_properness_certificate(grig, 3)
