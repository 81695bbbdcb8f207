"""Exhaustive search on tiny instances.

Distributional communication complexity is computed by a memoized search over
input rectangles; deterministic protocols suffice because averaging over
private coins cannot beat the best fixed coin outcome on expected error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .belief import ALICE, BOB, ProblemInstance, Signal, node_cost
from .bounds import choose_gamma, compute_L, compute_Q, compute_Un, compute_W
from .protocol import CapExceeded, Inner, Leaf, Node

MAX_SEARCH_DEPTH = 12
ERR_TOL = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    max_depth: int = 4
    eps: float = 0.0
    deterministic_only: bool = True
    max_evals: int = 5_000_000
    max_entries: int = 4096

    def __post_init__(self):
        if not 0 <= self.max_depth <= MAX_SEARCH_DEPTH:
            raise ValueError(f"max_depth must lie in [0, {MAX_SEARCH_DEPTH}]")
        if not 0 <= self.eps <= 1:
            raise ValueError("eps must lie in [0, 1]")
        if not self.deterministic_only:
            raise ValueError("only deterministic protocols are enumerated")


class SearchCapExceeded(CapExceeded):
    def __init__(self, msg: str, best_so_far=None, evaluations: int = 0):
        super().__init__(msg)
        self.best_so_far = best_so_far
        self.evaluations = evaluations


# -- tensor powers ------------------------------------------------------------


def _digits(x: int, base: int, n: int) -> list[int]:
    out = []
    for _ in range(n):
        x, r = divmod(x, base)
        out.append(r)
    return out[::-1]


def tensor_power(inst: ProblemInstance, n: int, max_entries: int = 4096) -> ProblemInstance:
    """n independent copies; inputs are base-|A| (|B|) digit strings, first copy most significant.

    The label packs the per-copy outputs as bits, first copy highest.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return inst
    if inst.N**n > max_entries:
        raise CapExceeded(f"tensor power has {inst.N ** n} entries, cap is {max_entries}")
    if np.any((inst.truth != 0) & (inst.truth != 1)):
        raise ValueError("tensor powers need 0/1 labels")
    mu, truth = inst.mu, inst.truth
    for _ in range(n - 1):
        mu = np.kron(mu, inst.mu)
        truth = np.kron(truth * 2, np.ones_like(inst.truth)) + np.kron(np.ones_like(truth), inst.truth)
    return ProblemInstance(truth, mu / mu.sum())


def parallel_compose(root: Node, inst: ProblemInstance, n: int) -> Node:
    """Run n copies of a protocol side by side on the tensor-power instance.

    Copies advance in phases: while the current speaker has pending signals in
    any copy she sends them (copy order), then the turn passes.  Every copy's
    speaker blocks line up with the phases, so alternations do not grow.
    """
    if n == 1:
        return root
    na, nb = inst.size_a, inst.size_b

    def lift(sig: Signal, k: int) -> Signal:
        base, size = (na, na**n) if sig.owner == ALICE else (nb, nb**n)
        return Signal(sig.owner, tuple(sig.probs[_digits(x, base, n)[k]] for x in range(size)))

    lifted: dict[tuple[int, int], Signal] = {}

    def build(states: tuple, speaker: str) -> Node:
        for k, node in enumerate(states):
            if isinstance(node, Inner) and node.owner == speaker:
                key = (id(node), k)
                if key not in lifted:
                    lifted[key] = lift(node.signal, k)
                kids = [build(states[:k] + (node.child(b),) + states[k + 1:], speaker) for b in (0, 1)]
                return Inner(lifted[key], kids[0], kids[1])
        if all(isinstance(s, Leaf) for s in states):
            return Leaf(sum(int(s.out) << (n - 1 - k) for k, s in enumerate(states)))
        return build(states, BOB if speaker == ALICE else ALICE)

    start = root.owner if isinstance(root, Inner) else ALICE
    return build((root,) * n, start)


# -- distributional communication complexity ----------------------------------


@dataclass
class CCResult:
    value: int | None
    witness: Node | None
    error: float | None
    evaluations: int
    eps: float
    max_depth: int

    @property
    def found(self) -> bool:
        return self.value is not None


def _splits(mask: int) -> Iterator[tuple[int, int]]:
    """Two-block partitions of a bitmask, the block holding the lowest bit first."""
    low = mask & -mask
    rest = mask ^ low
    sub = rest
    while True:
        first = sub | low
        second = mask ^ first
        if second:
            yield first, second
        if sub == 0:
            break
        sub = (sub - 1) & rest


def _bits(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


class _CCSearch:
    def __init__(self, inst: ProblemInstance, max_evals: int):
        self.inst = inst
        self.max_evals = max_evals
        self.evals = 0
        self.memo: dict[tuple[int, int, int], float] = {}
        self.labels = np.unique(inst.truth)

    def leaf(self, rows: int, cols: int) -> tuple[float, int]:
        r, c = _bits(rows), _bits(cols)
        mu = self.inst.mu[np.ix_(r, c)]
        truth = self.inst.truth[np.ix_(r, c)]
        total = float(mu.sum())
        best_mass, best_label = -1.0, int(truth.flat[0])
        for lab in self.labels:
            m = float(mu[truth == lab].sum())
            if m > best_mass + ERR_TOL:
                best_mass, best_label = m, int(lab)
        return max(total - best_mass, 0.0), best_label

    def best(self, rows: int, cols: int, d: int) -> float:
        key = (rows, cols, d)
        if key in self.memo:
            return self.memo[key]
        self.evals += 1
        if self.evals > self.max_evals:
            raise SearchCapExceeded(f"search exceeded {self.max_evals} evaluations", evaluations=self.evals)
        err, _ = self.leaf(rows, cols)
        if d > 0 and err > ERR_TOL:
            for s, t in _splits(rows):
                err = min(err, self.best(s, cols, d - 1) + self.best(t, cols, d - 1))
                if err <= ERR_TOL:
                    break
            if err > ERR_TOL:
                for s, t in _splits(cols):
                    err = min(err, self.best(rows, s, d - 1) + self.best(rows, t, d - 1))
                    if err <= ERR_TOL:
                        break
        self.memo[key] = err
        return err

    def witness(self, rows: int, cols: int, d: int) -> Node:
        target = self.best(rows, cols, d)
        err, label = self.leaf(rows, cols)
        if err <= target + ERR_TOL:
            return Leaf(label)
        na, nb = self.inst.size_a, self.inst.size_b
        for owner, mask, n in ((ALICE, rows, na), (BOB, cols, nb)):
            for s, t in _splits(mask):
                if owner == ALICE:
                    a, b = (s, cols), (t, cols)
                else:
                    a, b = (rows, s), (rows, t)
                if self.best(*a, d - 1) + self.best(*b, d - 1) <= target + ERR_TOL:
                    sig = Signal(owner, tuple(1.0 if s >> i & 1 else 0.0 for i in range(n)))
                    return Inner(sig, self.witness(*b, d - 1), self.witness(*a, d - 1))
        raise AssertionError("memo inconsistent with witness reconstruction")


def brute_force_cc(inst: ProblemInstance, eps: float, max_depth: int, max_evals: int = 5_000_000) -> CCResult:
    """Smallest depth of a deterministic protocol with prior error at most ``eps``.

    Iterative deepening over depth, memoized on (row set, column set, depth).
    ``value`` is None when nothing within ``max_depth`` works.
    """
    SearchConfig(max_depth=max_depth, eps=eps, max_evals=max_evals)
    search = _CCSearch(inst, max_evals)
    full_rows, full_cols = (1 << inst.size_a) - 1, (1 << inst.size_b) - 1
    best_err = None
    for d in range(max_depth + 1):
        try:
            err = search.best(full_rows, full_cols, d)
        except SearchCapExceeded as exc:
            exc.best_so_far = {"depth_checked": d - 1, "error": best_err}
            raise
        best_err = err
        if err <= eps + ERR_TOL:
            return CCResult(d, search.witness(full_rows, full_cols, d), err, search.evals, eps, max_depth)
    return CCResult(None, None, best_err, search.evals, eps, max_depth)


def enumerate_zero_error_protocols(inst: ProblemInstance, max_depth: int) -> Iterator[Node]:
    """Every deterministic protocol of depth <= max_depth that is correct on all input pairs.

    Inner nodes split the sender's live inputs into two nonempty blocks;
    monochromatic rectangles end in a leaf.
    """
    truth = inst.truth

    def go(rows: tuple, cols: tuple, d: int):
        labels = np.unique(truth[np.ix_(rows, cols)])
        if len(labels) == 1:
            yield Leaf(int(labels[0]))
            return
        if d == 0:
            return
        for owner, live, n in ((ALICE, rows, inst.size_a), (BOB, cols, inst.size_b)):
            mask = sum(1 << i for i in live)
            for s, t in _splits(mask):
                sig = Signal(owner, tuple(1.0 if s >> i & 1 else 0.0 for i in range(n)))
                one, zero = tuple(_bits(s)), tuple(_bits(t))
                if owner == ALICE:
                    hi_args, lo_args = (one, cols), (zero, cols)
                else:
                    hi_args, lo_args = (rows, one), (rows, zero)
                hi_list = list(go(*hi_args, d - 1))
                for lo in go(*lo_args, d - 1):
                    for hi in hi_list:
                        yield Inner(sig, lo, hi)

    yield from go(tuple(range(inst.size_a)), tuple(range(inst.size_b)), max_depth)


# -- information complexity sandwich ------------------------------------------


@dataclass
class SandwichResult:
    cc_value: int
    lower: float
    upper: float
    n: int
    eps: float
    L: float
    Un: float
    witness: Node | None = None
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "witness"}


def ic_sandwich(
    inst: ProblemInstance,
    alpha: float,
    eps: float,
    n: int,
    max_depth: int,
    c: float = 1.0,
    max_evals: int = 5_000_000,
) -> SandwichResult:
    """Bracket the zero-error information complexity by CC of the n-fold instance.

    upper = CC/n + L(eps) (L = 0 at eps = 0) and lower = max(0, CC/n - U_n/n)
    with the heuristic constant ``c`` inside U_n; at eps = 0 the U_n term is
    unbounded and the lower side is 0.  ``alpha`` only labels the run.
    """
    big = tensor_power(inst, n)
    res = brute_force_cc(big, eps, max_depth, max_evals)
    if not res.found:
        raise ValueError(f"no protocol of depth <= {max_depth} reaches error {eps} on the {n}-fold instance")
    per_copy = res.value / n
    notes = [f"alpha={alpha}"]
    if eps == 0:
        L, Un = 0.0, math.inf
        notes.append("eps = 0: continuity loss vanishes, U_n term unbounded")
    else:
        rho, N = inst.rho, inst.N
        try:
            L = compute_L(eps, N, rho)
        except ValueError as exc:
            L = math.inf
            notes.append(str(exc))
        if N < 2:
            Un = 0.0
        else:
            stage = eps / 5
            gamma = choose_gamma(stage, rho, inst.size_a + inst.size_b)
            q = compute_Q(stage, gamma, N, inst.size_a, inst.size_b)
            log2_W = compute_W(q.log2_derived, stage, N)
            Un = 2.0 ** min(compute_Un(math.log2(n), eps, log2_W, math.log2(N), c), 1023.0)
    lower = max(0.0, per_copy - Un / n)
    return SandwichResult(res.value, lower, per_copy + L, n, eps, L, Un, res.witness, notes)


def _leaf_mass_cost(inst: ProblemInstance, lam: np.ndarray, kap: np.ndarray) -> float:
    joint = inst.mu * np.outer(lam, kap)
    m = joint.sum()
    return 0.0 if m <= 0 else float(m * node_cost(joint / m, inst))


def discretized_ic_search(
    inst: ProblemInstance,
    lattice: Sequence[Signal],
    max_depth: int,
    max_evals: int = 2_000_000,
) -> tuple[float, Node]:
    """Cheapest zero-error protocol of depth <= max_depth built from ``lattice`` signals.

    Information cost is the sum over leaves of (leaf mass) * (node cost), and a
    leaf is allowed only on a monochromatic reachable rectangle.
    """
    SearchConfig(max_depth=max_depth)
    for sig in lattice:
        sig.outcome_weights(inst.mu.shape)
    truth = inst.truth
    memo: dict = {}
    evals = 0

    def best(lam, kap, d):
        nonlocal evals
        key = (lam.tobytes(), kap.tobytes(), d)
        if key in memo:
            return memo[key]
        evals += 1
        if evals > max_evals:
            raise SearchCapExceeded(f"search exceeded {max_evals} evaluations", evaluations=evals)
        rows, cols = np.flatnonzero(lam > 0), np.flatnonzero(kap > 0)
        labels = np.unique(truth[np.ix_(rows, cols)]) if len(rows) and len(cols) else np.array([0])
        out = (math.inf, None)
        if len(labels) == 1:
            out = (_leaf_mass_cost(inst, lam, kap), Leaf(int(labels[0])))
        elif d > 0:
            for sig in lattice:
                s = np.array(sig.probs)
                if sig.owner == ALICE:
                    hi, lo = best(lam * s, kap, d - 1), best(lam * (1 - s), kap, d - 1)
                else:
                    hi, lo = best(lam, kap * s, d - 1), best(lam, kap * (1 - s), d - 1)
                total = hi[0] + lo[0]
                if total < out[0] - ERR_TOL:
                    out = (total, Inner(sig, lo[1], hi[1]))
        memo[key] = out
        return out

    value, proto = best(np.ones(inst.size_a), np.ones(inst.size_b), max_depth)
    if proto is None:
        raise ValueError(f"no zero-error protocol of depth <= {max_depth} over this lattice")
    return value, proto


def revealer_lattice(inst: ProblemInstance) -> list[Signal]:
    return [Signal.revealer(ALICE, inst.size_a, i) for i in range(inst.size_a)] + [
        Signal.revealer(BOB, inst.size_b, j) for j in range(inst.size_b)
    ]


def grid_lattice(inst: ProblemInstance, values: Sequence[float]) -> list[Signal]:
    """Revealers plus every signal with parameters drawn from ``values``."""
    import itertools

    out = revealer_lattice(inst)
    for owner, n in ((ALICE, inst.size_a), (BOB, inst.size_b)):
        for combo in itertools.product(values, repeat=n):
            sig = Signal(owner, combo)
            if sig not in out and len(set(combo)) > 1:
                out.append(sig)
    return out
