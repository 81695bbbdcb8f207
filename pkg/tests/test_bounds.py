import math

import mpmath
import numpy as np
import pytest

from infocomplex.bounds import (
    capped_entropy,
    choose_chain_epsilon,
    choose_gamma,
    compute_L,
    compute_Q,
    compute_U,
    compute_Un,
    compute_W,
    full_chain,
    hessian_bound,
    lattice_resolution,
    log2_add,
)

from mp_oracle import independent_chain, mp_h, mp_L, mp_Q, mp_Un, mp_W, rel


def test_log2_add():
    assert log2_add(3.0, 3.0) == pytest.approx(4.0)
    assert log2_add(-math.inf, 5.0) == 5.0
    assert log2_add(1000.0, 0.0) == pytest.approx(1000.0)


def test_capped_entropy_and_hessian():
    assert capped_entropy(0.5) == 1.0 and capped_entropy(0.9) == 1.0
    assert capped_entropy(0.11) == pytest.approx(float(mp_h(0.11)))
    assert hessian_bound(0.1) == pytest.approx(20 / math.log(2))
    assert lattice_resolution(0.05, 0.1, 4) == pytest.approx(math.sqrt(81 * 20 / math.log(2) * 4 / 0.05))


def test_Q_edge_and_precision():
    with mpmath.workdps(50):
        for N in (2, 4, 6):
            q = compute_Q(1.0, 1.0, N, 2, 3)
            expect = (648 / mpmath.log(2)) ** (mpmath.mpf(N) / 2) + 5
            assert rel(2 ** mpmath.mpf(q.log2_closed), expect) < 1e-9
        q = compute_Q(0.1, 0.01, 4, 2, 2)
        assert rel(q.log2_closed, mpmath.log(mp_Q(0.1, 0.01, 4, 4, False), 2)) < 1e-12
        assert rel(q.log2_derived, mpmath.log(mp_Q(0.1, 0.01, 4, 4, True), 2)) < 1e-12


def test_Q_monotone(rng):
    for _ in range(100):
        N = int(rng.integers(2, 10))
        e1, e2 = sorted(rng.uniform(1e-6, 1, 2))
        g1, g2 = sorted(rng.uniform(1e-4, 1, 2))
        assert compute_Q(e1, g1, N, 2, 2).log2_closed >= compute_Q(e2, g1, N, 2, 2).log2_closed
        assert compute_Q(e1, g1, N, 2, 2).log2_closed >= compute_Q(e1, g2, N, 2, 2).log2_closed
        assert compute_Q(e1, g1, N, 2, 2).log2_derived >= compute_Q(e1, g1, N, 2, 2).log2_closed
    with pytest.raises(ValueError):
        compute_Q(0.0, 0.5, 4, 2, 2)


def test_W():
    assert 2 ** compute_W(0.0, 1.0, 2) == pytest.approx(3.0)
    ws = [compute_W(lq, 0.1, 4) for lq in (0, 1, 5, 50)]
    assert all(a < b for a, b in zip(ws, ws[1:]))
    assert compute_W(3.0, 0.1, 1) == -math.inf
    with mpmath.workdps(50):
        Q = mp_Q(0.02, 1e-6, 4, 4, True)
        lw = compute_W(float(mpmath.log(Q, 2)), 0.02, 4)
        assert rel(lw, mpmath.log(mp_W(Q, 0.02, 4), 2)) < 1e-12


def test_L():
    rho = 0.25
    vals = [compute_L(10.0**-k, 4, rho) for k in (14, 18, 24, 40)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-6
    with pytest.raises(ValueError):
        compute_L(rho**8, 4, rho)
    with pytest.raises(ValueError):
        compute_L(0.0, 4, rho)
    with mpmath.workdps(50):
        assert rel(compute_L(1e-16, 4, rho), mp_L(1e-16, 4, rho)) < 1e-9


def test_Un_against_sqrt_n_U(rng):
    with mpmath.workdps(50):
        for _ in range(200):
            eps = 10 ** rng.uniform(-12, -1)
            log2_W = rng.uniform(0, 200)
            log2_n = rng.uniform(0, 60)
            ic = rng.uniform(0, 5)
            c = rng.uniform(0.1, 10)
            W, n = mpmath.mpf(2) ** log2_W, mpmath.mpf(2) ** log2_n
            un = compute_Un(log2_n, eps, log2_W, ic, c)
            u = compute_U(eps, log2_W, ic, c)
            assert rel(un, mpmath.log(mp_Un(n, eps, W, ic, c), 2)) < 1e-9
            assert rel(u, mpmath.log(mp_Un(1, eps, W, ic, c), 2)) < 1e-9
            lhs = mpmath.mpf(2) ** un
            rhs = n * eps + mpmath.sqrt(n) * mpmath.mpf(2) ** u
            assert lhs <= rhs * (1 + 1e-12)


def test_choose_chain_epsilon_and_gamma():
    e = choose_chain_epsilon(0.5, 4, 0.25)
    assert compute_L(e, 4, 0.25) <= 0.25 and e <= 0.25
    assert compute_L(2 * e, 4, 0.25) > 0.25 if 2 * e < 0.25**8 else True
    g = choose_gamma(0.01, 0.25, 4)
    assert g < 0.25**2 and 4 * capped_entropy(math.sqrt(g) / 0.25) <= 0.01
    assert 4 * capped_entropy(math.sqrt(2 * g) / 0.25) > 0.01


def test_chain_matches_50_digit_recomputation():
    chain = full_chain(4, 0.25, 0.5, 1.0)
    with mpmath.workdps(50):
        ref = independent_chain(4, 0.25, 0.5, 1.0)
        assert rel(chain.eps, ref["eps"]) < 1e-6
        assert rel(chain.gamma, ref["gamma"]) < 1e-6
        assert rel(chain.log2_Q_derived, mpmath.log(ref["Q"], 2)) < 1e-6
        assert rel(chain.log2_W, mpmath.log(ref["W"], 2)) < 1e-6
        assert rel(chain.log2_U, mpmath.log(ref["U"], 2)) < 1e-6
        assert rel(chain.log2_n, mpmath.log(ref["n"], 2)) < 1e-6
        assert rel(chain.log2_d, mpmath.log(ref["d"], 2)) < 1e-6
        assert rel(chain.log2_log2_count, ref["loglog"]) < 1e-6
    assert chain.L <= 0.25
    assert chain.heuristic


def test_chain_monotone_in_alpha():
    prev = None
    for k in range(0, 7):
        ch = full_chain(4, 0.25, 2.0**-k)
        if prev is not None:
            assert ch.log2_n >= prev.log2_n
            assert ch.log2_d >= prev.log2_d
            assert ch.eps <= prev.eps
        assert ch.L <= ch.alpha / 2
        prev = ch


def test_chain_rows_and_dict():
    ch = full_chain(4, 0.25, 0.5)
    labels = [r[0] for r in ch.rows()]
    assert "log2 W" in labels and "gamma" in labels
    doc = ch.as_dict()
    assert isinstance(doc["log2_log2_count"], str)
    with pytest.raises(ValueError):
        full_chain(1, 0.25, 0.5)
    with pytest.raises(ValueError):
        full_chain(4, 0.25, 0.0)
