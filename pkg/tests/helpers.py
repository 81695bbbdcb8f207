"""Generators and brute-force oracles shared by the test modules."""

import itertools
import math

import numpy as np

from infocomplex.belief import ALICE, BOB, ProblemInstance, Signal, shift
from infocomplex.protocol import Inner, Leaf, annotate, exchange_inputs, random_signal


def uniform(na=2, nb=2):
    return np.full((na, nb), 1.0 / (na * nb))


def random_instance(rng, na, nb, full_support=True):
    mu = rng.dirichlet(np.ones(na * nb)).reshape(na, nb)
    if not full_support:
        mu.flat[rng.integers(na * nb)] = 0.0
        mu /= mu.sum()
    return ProblemInstance(rng.integers(0, 2, (na, nb)), mu)


def h2(x):
    return 0.0 if x in (0.0, 1.0) else -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def node_cost_loops(p, mu):
    """Internal node cost written out entry by entry."""
    p, mu = np.asarray(p, float), np.asarray(mu, float)
    na, nb = p.shape
    total = 0.0
    for a in range(na):
        pa, ma = sum(p[a]), sum(mu[a])
        for b in range(nb):
            if p[a, b] > 0:
                total += p[a, b] * math.log2((p[a, b] / pa) / (mu[a, b] / ma))
    for b in range(nb):
        pb, mb = sum(p[:, b]), sum(mu[:, b])
        for a in range(na):
            if p[a, b] > 0:
                total += p[a, b] * math.log2((p[a, b] / pb) / (mu[a, b] / mb))
    return total


def posterior_multiset(p, sigs):
    """(weight, posterior) after sending each signal in turn, zero-weight branches dropped."""
    items = [(1.0, np.asarray(p, float))]
    for sig in sigs:
        nxt = []
        for w, q in items:
            res = shift(q, sig)
            for P, r in res.branches():
                if r is not None and w * P > 0:
                    nxt.append((w * P, r))
        items = nxt
    return items


def multisets_match(xs, ys, tol=1e-9):
    if len(xs) != len(ys):
        return False
    used = [False] * len(ys)
    for w, q in xs:
        for k, (v, r) in enumerate(ys):
            if not used[k] and abs(w - v) <= tol and np.abs(q - r).max() <= tol:
                used[k] = True
                break
        else:
            return False
    return True


def iid_info_enumerated(sig, p, t):
    """I(sender; X^t | receiver) by enumerating all 2^t output strings."""
    q = np.asarray(p, float)
    if sig.owner == BOB:
        q = q.T
    s = np.array(sig.probs)
    total = 0.0
    for b in range(q.shape[1]):
        col = q[:, b]
        if col.sum() <= 0:
            continue
        cond = col / col.sum()
        for xs in itertools.product((0, 1), repeat=t):
            k = sum(xs)
            like = s**k * (1 - s) ** (t - k)
            joint = cond * like
            px = joint.sum()
            for a in range(len(cond)):
                if joint[a] > 0:
                    total += col.sum() * joint[a] * math.log2(like[a] / px)
    return total


def balanced_signal(owner, p, size, rng):
    """Random signal balanced at p with size exactly ``size`` (when the owner has two live inputs)."""
    marg = np.asarray(p).sum(axis=1 if owner == ALICE else 0)
    z = rng.normal(size=len(marg))
    z -= np.dot(marg, z) / marg.sum()
    z[marg == 0] = 0.0
    if np.abs(z).max() == 0:
        return Signal.constant(owner, len(marg))
    z *= size / np.abs(z).max()
    return Signal(owner, tuple(0.5 + z))


def random_small_balanced_protocol(inst, depth, rng, size_range=(0.03, 0.06)):
    """Balanced small signals for ``depth`` levels, then an input exchange."""

    def go(d, p):
        if d == 0:
            return exchange_inputs(inst)
        owner = ALICE if rng.random() < 0.5 else BOB
        sig = balanced_signal(owner, p, rng.uniform(*size_range), rng)
        res = shift(p, sig)
        return Inner(sig, go(d - 1, res.p0), go(d - 1, res.p1))

    return go(depth, inst.mu)


def roundable_parameters(root, inst):
    """(gamma, delta) for which every reachable non-revealer signal meets the rounding preconditions."""
    powers, sizes, entries = [], [], []
    for a in annotate(root, inst).walk():
        if a.pruned:
            continue
        entries.append(a.belief[a.belief > 0].min())
        if isinstance(a.node, Inner) and not a.node.signal.is_revealer:
            res = a.shift
            powers.append(max(np.abs(a.belief - q).max() for _, q in res.branches() if q is not None))
            sizes.append(max(abs(x - 0.5) for x in a.node.signal.probs))
    delta = min(min(powers), min(entries) / 4)
    gamma = min(min(entries), delta / max(sizes)) * 0.999
    return gamma, delta


def pooled_protocol(inst, depth, rng, pool_size=2, size=0.05):
    """Zero-error protocol drawing signals from a small pool so that signals repeat along paths."""
    pool = [
        Signal(owner, tuple(rng.uniform(0.5 - size, 0.5 + size, n)))
        for owner, n in ((ALICE, inst.size_a), (BOB, inst.size_b))
        for _ in range(pool_size)
    ]

    def go(d):
        if d == 0:
            return exchange_inputs(inst)
        sig = pool[rng.integers(len(pool))]
        return Inner(sig, go(d - 1), go(d - 1))

    return go(depth)


def unsafe_prone_protocol(inst, depth, rng):
    """Random zero-error protocol with strong unbalanced signals."""

    def go(d, rows, cols):
        labels = np.unique(inst.truth[np.ix_(rows, cols)])
        if len(labels) == 1:
            return Leaf(int(labels[0]))
        if d == 0:
            return exchange_inputs(inst, rows, cols)
        owner = ALICE if rng.random() < 0.5 else BOB
        n = inst.size_a if owner == ALICE else inst.size_b
        sig = Signal(owner, tuple(rng.choice([0.02, 0.1, 0.5, 0.9, 0.98], n)))
        return Inner(sig, go(d - 1, rows, cols), go(d - 1, rows, cols))

    return go(depth, list(range(inst.size_a)), list(range(inst.size_b)))


def signal_sequence_belief(mu, rng, steps):
    """Belief reached from mu by random signals and random outcomes."""
    p = np.asarray(mu, float)
    for _ in range(steps):
        owner = ALICE if rng.random() < 0.5 else BOB
        n = p.shape[0] if owner == ALICE else p.shape[1]
        sig = random_signal(owner, n, rng)
        res = shift(p, sig)
        choices = [q for _, q in res.branches() if q is not None]
        p = choices[rng.integers(len(choices))]
    return p
