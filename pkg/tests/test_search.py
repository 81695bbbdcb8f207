import itertools
import math

import numpy as np
import pytest

from helpers import random_instance, uniform
from infocomplex.belief import ALICE, BOB, ProblemInstance, Signal
from infocomplex.protocol import (
    Inner,
    Leaf,
    alternations,
    cc,
    error_probability,
    ic_leaves,
    ic_transcript,
    verify_zero_error,
)
from infocomplex.search import (
    SearchCapExceeded,
    SearchConfig,
    brute_force_cc,
    discretized_ic_search,
    enumerate_zero_error_protocols,
    grid_lattice,
    ic_sandwich,
    parallel_compose,
    revealer_lattice,
    tensor_power,
)

U = uniform()
AND = ProblemInstance([[0, 0], [0, 1]], U)
ZERO = ProblemInstance([[0, 0], [0, 0]], U)


def naive_min_error(inst, rows, cols, d):
    """Smallest prior error of a deterministic protocol of depth <= d on a rectangle."""
    mass = {}
    for a in rows:
        for b in cols:
            mass[inst.truth[a, b]] = mass.get(inst.truth[a, b], 0.0) + inst.mu[a, b]
    total = sum(mass.values())
    best = total - max(mass.values(), default=0.0)
    if d == 0:
        return best
    for side in (0, 1):
        live = rows if side == 0 else cols
        for r in range(1, len(live)):
            for part in itertools.combinations(live, r):
                rest = tuple(x for x in live if x not in part)
                if side == 0:
                    e = naive_min_error(inst, part, cols, d - 1) + naive_min_error(inst, rest, cols, d - 1)
                else:
                    e = naive_min_error(inst, rows, part, d - 1) + naive_min_error(inst, rows, rest, d - 1)
                best = min(best, e)
    return best


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(max_depth=13)
    with pytest.raises(ValueError):
        SearchConfig(deterministic_only=False)


def test_tensor_power_examples(rng):
    assert tensor_power(AND, 1) is AND
    sq = tensor_power(AND, 2)
    assert sq.truth.shape == (4, 4)
    np.testing.assert_allclose(sq.mu, np.full((4, 4), 1 / 16))
    inst = random_instance(rng, 2, 3)
    sq = tensor_power(inst, 2)
    for a1, a2, b1, b2 in itertools.product(range(2), range(2), range(3), range(3)):
        assert sq.mu[a1 * 2 + a2, b1 * 3 + b2] == pytest.approx(inst.mu[a1, b1] * inst.mu[a2, b2])
        assert sq.truth[a1 * 2 + a2, b1 * 3 + b2] == 2 * inst.truth[a1, b1] + inst.truth[a2, b2]


def test_tensor_power_cap():
    with pytest.raises(Exception):
        tensor_power(AND, 7)


def test_brute_force_examples():
    r = brute_force_cc(ZERO, 0.0, 3)
    assert r.value == 0 and isinstance(r.witness, Leaf)
    r = brute_force_cc(AND, 0.25, 3)
    assert r.value == 0 and r.witness.out == 0
    r = brute_force_cc(AND, 0.0, 3)
    assert r.value == 2
    assert verify_zero_error(r.witness, AND)
    assert cc(r.witness) == 2
    # no depth-1 protocol is zero-error, by direct enumeration
    assert list(enumerate_zero_error_protocols(AND, 1)) == []


def test_brute_force_matches_naive_search(rng):
    for _ in range(15):
        na, nb = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        inst = random_instance(rng, na, nb)
        for eps in (0.0, 0.05, 0.2):
            ok = [naive_min_error(inst, tuple(range(na)), tuple(range(nb)), d) <= eps + 1e-12 for d in range(4)]
            r = brute_force_cc(inst, eps, 3)
            assert r.found == any(ok)
            if r.found:
                assert r.value == ok.index(True)


def test_brute_force_monotone_and_witness(rng):
    for _ in range(10):
        inst = random_instance(rng, 3, 3)
        prev = None
        for eps in (0.0, 0.05, 0.1, 0.3, 0.6):
            r = brute_force_cc(inst, eps, 5)
            assert r.found
            assert error_probability(r.witness, inst) <= eps + 1e-12
            assert cc(r.witness) == r.value
            if prev is not None:
                assert r.value <= prev
            prev = r.value
        shallow = brute_force_cc(inst, 0.05, 1)
        deep = brute_force_cc(inst, 0.05, 4)
        if shallow.found:
            assert deep.value == shallow.value


def test_brute_force_cap_reports_progress():
    inst = tensor_power(AND, 2)
    with pytest.raises(SearchCapExceeded) as info:
        brute_force_cc(inst, 0.0, 6, max_evals=50)
    assert "depth_checked" in info.value.best_so_far


def test_enumerated_protocols_are_zero_error():
    protos = list(enumerate_zero_error_protocols(AND, 3))
    assert protos
    assert all(verify_zero_error(p, AND) and cc(p) <= 3 for p in protos)


def test_parallel_composition(rng):
    witness = brute_force_cc(AND, 0.0, 3).witness
    single = ic_transcript(witness, AND)
    for n in (2, 3):
        big = tensor_power(AND, n)
        comp = parallel_compose(witness, AND, n)
        assert verify_zero_error(comp, big)
        assert ic_transcript(comp, big) == pytest.approx(n * single, abs=1e-6)
        assert alternations(comp) == alternations(witness)
    inst = random_instance(rng, 2, 2)
    proto = brute_force_cc(inst, 0.0, 3).witness
    big = tensor_power(inst, 2)
    assert ic_transcript(parallel_compose(proto, inst, 2), big) == pytest.approx(
        2 * ic_transcript(proto, inst), abs=1e-6
    )


def test_sandwich_examples():
    r = ic_sandwich(ZERO, 0.5, 0.0, 1, 3)
    assert r.lower <= 0 == r.upper
    r = ic_sandwich(AND, 0.5, 0.0, 1, 3)
    assert r.upper == 2.0
    assert r.lower <= r.upper
    assert r.lower <= ic_transcript(r.witness, AND) + 1e-9
    for proto in enumerate_zero_error_protocols(AND, 3):
        assert r.lower <= ic_transcript(proto, AND) + 1e-9


def test_sandwich_positive_eps():
    inst = ProblemInstance([[0, 0], [0, 1]], U)
    r = ic_sandwich(inst, 0.5, 1e-12, 1, 3)
    assert r.lower <= r.upper
    assert math.isfinite(r.L)
    assert r.lower == 0.0


def test_discretized_search_examples():
    value, proto = discretized_ic_search(ZERO, revealer_lattice(ZERO), 2)
    assert value == 0 and isinstance(proto, Leaf)
    value, proto = discretized_ic_search(AND, revealer_lattice(AND), 2)
    assert value == pytest.approx(1.5)
    assert ic_leaves(proto, AND) == pytest.approx(value, abs=1e-12)
    assert ic_transcript(proto, AND) == pytest.approx(value, abs=1e-9)
    assert verify_zero_error(proto, AND)
    assert value >= ic_sandwich(AND, 0.5, 0.0, 1, 3).lower


def test_discretized_search_monotone():
    rev = revealer_lattice(AND)
    grid = grid_lattice(AND, [0.25, 0.75])
    v2 = discretized_ic_search(AND, rev, 2)[0]
    v3 = discretized_ic_search(AND, rev, 3)[0]
    g3, proto = discretized_ic_search(AND, grid, 3)
    assert v3 <= v2 + 1e-12
    assert g3 <= v3 + 1e-12
    assert verify_zero_error(proto, AND)
    assert ic_transcript(proto, AND) == pytest.approx(g3, abs=1e-9)


def test_discretized_search_no_protocol():
    with pytest.raises(ValueError):
        discretized_ic_search(AND, revealer_lattice(AND), 1)
