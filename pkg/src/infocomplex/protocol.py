"""Protocol trees, their execution semantics and three information-cost evaluators.

Trees are immutable and may share subtrees (transforms reuse continuations),
so anything that counts nodes treats the structure as the tree it unfolds to.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .belief import (
    ALICE,
    BOB,
    PROB_TOL,
    ProblemInstance,
    Signal,
    ShiftResult,
    entropy,
    external_node_cost,
    node_cost,
    shift,
    signal_cost,
)


@dataclass(frozen=True, eq=False)
class Leaf:
    out: int


@dataclass(frozen=True, eq=False)
class Inner:
    signal: Signal
    c0: "Node"
    c1: "Node"

    @property
    def owner(self) -> str:
        return self.signal.owner

    def child(self, bit: int) -> "Node":
        return self.c1 if bit else self.c0


Node = Union[Leaf, Inner]


class CapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Caps:
    max_depth: int = 20
    max_nodes: int = 10**6


DEFAULT_CAPS = Caps()


# -- structure ----------------------------------------------------------------


def cc(root: Node) -> int:
    """Depth of the deepest leaf."""
    memo: dict[int, int] = {}

    def go(node):
        if isinstance(node, Leaf):
            return 0
        key = id(node)
        if key not in memo:
            memo[key] = 1 + max(go(node.c0), go(node.c1))
        return memo[key]

    return go(root)


def node_count(root: Node) -> int:
    memo: dict[int, int] = {}

    def go(node):
        if isinstance(node, Leaf):
            return 1
        key = id(node)
        if key not in memo:
            memo[key] = 1 + go(node.c0) + go(node.c1)
        return memo[key]

    return go(root)


def leaf_count(root: Node) -> int:
    return (node_count(root) + 1) // 2


def alternations(root: Node) -> int:
    """Maximum number of speaker changes along any root-to-leaf path."""
    memo: dict[int, int] = {}

    def go(node):
        key = id(node)
        if key in memo:
            return memo[key]
        best = 0
        for child in (node.c0, node.c1):
            if isinstance(child, Inner):
                best = max(best, go(child) + (child.owner != node.owner))
        memo[key] = best
        return best

    return 0 if isinstance(root, Leaf) else go(root)


def check_caps(root: Node, caps: Caps = DEFAULT_CAPS, where: str = "protocol") -> None:
    depth = cc(root)
    if depth > caps.max_depth:
        raise CapExceeded(f"{where}: depth {depth} exceeds cap {caps.max_depth}")
    count = node_count(root)
    if count > caps.max_nodes:
        raise CapExceeded(f"{where}: {count} nodes exceed cap {caps.max_nodes}")


def distinct_signals(root: Node) -> set[Signal]:
    seen: set[int] = set()
    out: set[Signal] = set()
    stack = [root]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf) or id(node) in seen:
            continue
        seen.add(id(node))
        out.add(node.signal)
        stack.extend((node.c0, node.c1))
    return out


def validate(root: Node, inst: ProblemInstance) -> None:
    for sig in distinct_signals(root):
        sig.outcome_weights(inst.mu.shape)


# -- annotation ---------------------------------------------------------------


@dataclass
class AnnotatedNode:
    """A node with the observer's belief and its reach probability.

    Subtrees reached with probability 0 under the prior keep ``belief=None``
    and are not expanded further.
    """

    node: Node
    belief: np.ndarray | None
    reach: float
    depth: int
    children: tuple["AnnotatedNode", "AnnotatedNode"] | None = None
    shift: ShiftResult | None = None

    @property
    def sender(self) -> str | None:
        return self.node.owner if isinstance(self.node, Inner) else None

    @property
    def pruned(self) -> bool:
        return self.belief is None

    def walk(self) -> Iterator["AnnotatedNode"]:
        stack = [self]
        while stack:
            a = stack.pop()
            yield a
            if a.children:
                stack.extend(reversed(a.children))

    def leaves(self) -> Iterator["AnnotatedNode"]:
        return (a for a in self.walk() if isinstance(a.node, Leaf) and not a.pruned)


def annotate(root: Node, inst: ProblemInstance, belief=None, reach: float = 1.0) -> AnnotatedNode:
    validate(root, inst)
    start = inst.mu if belief is None else np.asarray(belief, dtype=float)
    return _annotate(root, start, reach, 0)


def _annotate(node, p, reach, depth):
    ann = AnnotatedNode(node, p, reach, depth)
    if p is None or isinstance(node, Leaf):
        return ann
    res = shift(p, node.signal)
    ann.shift = res
    ann.children = (
        _annotate(node.c0, res.p0, reach * res.P0 if res.p0 is not None else 0.0, depth + 1),
        _annotate(node.c1, res.p1, reach * res.P1 if res.p1 is not None else 0.0, depth + 1),
    )
    return ann


# -- information cost, three ways ---------------------------------------------


def ic_leaves(root: Node, inst: ProblemInstance, external: bool = False) -> float:
    cost = external_node_cost if external else node_cost
    return sum(a.reach * cost(a.belief, inst) for a in annotate(root, inst).leaves())


def ic_signal_sum(root: Node, inst: ProblemInstance, external: bool = False) -> float:
    total = 0.0
    for a in annotate(root, inst).walk():
        if isinstance(a.node, Inner) and not a.pruned:
            total += a.reach * signal_cost(a.node.signal, a.belief, inst, external)
    return total


def leaf_reach(root: Node, inst: ProblemInstance) -> Iterator[tuple[Leaf, np.ndarray, np.ndarray]]:
    """Yield ``(leaf, lam, kap)`` with Pr[leaf | a, b] = lam[a] * kap[b], independent of the prior."""
    stack = [(root, np.ones(inst.size_a), np.ones(inst.size_b))]
    while stack:
        node, lam, kap = stack.pop()
        if isinstance(node, Leaf):
            yield node, lam, kap
            continue
        s = np.array(node.signal.probs)
        if len(s) != (inst.size_a if node.owner == ALICE else inst.size_b):
            raise ValueError("signal does not match the instance alphabet")
        if node.owner == ALICE:
            stack.append((node.c1, lam * s, kap))
            stack.append((node.c0, lam * (1 - s), kap))
        else:
            stack.append((node.c1, lam, kap * s))
            stack.append((node.c0, lam, kap * (1 - s)))


def transcript_joint(root: Node, inst: ProblemInstance) -> np.ndarray:
    """Joint distribution of (A, B, leaf) as an array of shape (|A|, |B|, leaves)."""
    cols = [inst.mu * np.outer(lam, kap) for _, lam, kap in leaf_reach(root, inst)]
    return np.stack(cols, axis=-1)


def ic_transcript(root: Node, inst: ProblemInstance, external: bool = False) -> float:
    """I(A;T|B) + I(B;T|A), or I(AB;T), straight from entropies of the transcript joint."""
    J = transcript_joint(root, inst)
    h_abt = entropy(J)
    h_ab = entropy(J.sum(axis=2))
    if external:
        return h_ab + entropy(J.sum(axis=(0, 1))) - h_abt
    h_bt = entropy(J.sum(axis=0))
    h_at = entropy(J.sum(axis=1))
    h_a = entropy(J.sum(axis=(1, 2)))
    h_b = entropy(J.sum(axis=(0, 2)))
    return (h_ab + h_bt - h_b - h_abt) + (h_ab + h_at - h_a - h_abt)


# -- correctness --------------------------------------------------------------


def verify_zero_error(root: Node, inst: ProblemInstance) -> bool:
    """Every leaf any input pair can reach (prior-null pairs included) carries f(a, b)."""
    for leaf, lam, kap in leaf_reach(root, inst):
        reach = np.outer(lam > 0, kap > 0)
        if np.any(reach & (inst.truth != leaf.out)):
            return False
    return True


def error_probability(root: Node, inst: ProblemInstance) -> float:
    err = 0.0
    for leaf, lam, kap in leaf_reach(root, inst):
        wrong = inst.truth != leaf.out
        err += float((inst.mu * np.outer(lam, kap))[wrong].sum())
    return err


@dataclass(frozen=True)
class CostReport:
    ic_internal: float
    ic_external: float
    cc: int
    alternations: int
    error_prob: float
    leaf_count: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def cost_report(root: Node, inst: ProblemInstance) -> CostReport:
    return CostReport(
        ic_internal=ic_transcript(root, inst),
        ic_external=ic_transcript(root, inst, external=True),
        cc=cc(root),
        alternations=alternations(root),
        error_prob=error_probability(root, inst),
        leaf_count=leaf_count(root),
    )


# -- execution ----------------------------------------------------------------


def sample_run(root: Node, inst: ProblemInstance, rng) -> tuple[tuple[int, int], Leaf, tuple[int, ...]]:
    """One execution on an input pair drawn from the prior.

    ``rng`` is a seed or a numpy Generator; equal seeds give equal runs.
    """
    rng = np.random.default_rng(rng)
    flat = rng.choice(inst.N, p=inst.mu.ravel())
    a, b = divmod(int(flat), inst.size_b)
    bits = []
    node = root
    while isinstance(node, Inner):
        x = a if node.owner == ALICE else b
        bit = int(rng.random() < node.signal.probs[x])
        bits.append(bit)
        node = node.child(bit)
    return (a, b), node, tuple(bits)


# -- builders -----------------------------------------------------------------


def exchange_inputs(inst: ProblemInstance, rows=None, cols=None, first: str = ALICE) -> Node:
    """Revealer cascade: ``first`` pins down her input, then the other party.

    Stops early once every remaining input pair has the same label, so on a
    constant function this is a single leaf.
    """
    rows = tuple(range(inst.size_a)) if rows is None else tuple(rows)
    cols = tuple(range(inst.size_b)) if cols is None else tuple(cols)
    if not rows or not cols:
        return Leaf(0)
    return _exchange(inst, rows, cols, first)


def _exchange(inst, rows, cols, first):
    labels = np.unique(inst.truth[np.ix_(rows, cols)])
    if len(labels) == 1:
        return Leaf(int(labels[0]))
    order = (ALICE, BOB) if first == ALICE else (BOB, ALICE)
    for owner in order:
        live = rows if owner == ALICE else cols
        if len(live) > 1:
            i = live[0]
            n = inst.size_a if owner == ALICE else inst.size_b
            rest = live[1:]
            if owner == ALICE:
                yes, no = _exchange(inst, (i,), cols, first), _exchange(inst, rest, cols, first)
            else:
                yes, no = _exchange(inst, rows, (i,), first), _exchange(inst, rows, rest, first)
            return Inner(Signal.revealer(owner, n, i), no, yes)
    raise AssertionError("single input pair with several labels")


def constant_protocol(out: int) -> Leaf:
    return Leaf(int(out))


def random_signal(owner: str, n: int, rng, balanced_at=None, max_size: float = 0.5) -> Signal:
    """Random signal; optionally balanced at a belief with size at most ``max_size``."""
    if balanced_at is None:
        return Signal(owner, tuple(rng.uniform(0.5 - max_size, 0.5 + max_size, n)))
    pa = np.asarray(balanced_at).sum(axis=1 if owner == ALICE else 0)
    z = rng.normal(size=n)
    z -= np.dot(pa, z) / pa.sum()
    z[pa == 0] = 0.0
    scale = np.abs(z).max()
    if scale == 0:
        return Signal.constant(owner, n)
    z *= rng.uniform(0.2, 1.0) * max_size / scale
    return Signal(owner, tuple(0.5 + z))


def random_protocol(inst: ProblemInstance, depth: int, rng, leaf_prob: float = 0.2) -> Node:
    """Arbitrary random tree with random signals and random labels (not necessarily correct)."""

    def go(d):
        if d == 0 or rng.random() < leaf_prob:
            return Leaf(int(rng.integers(2)))
        owner = ALICE if rng.random() < 0.5 else BOB
        n = inst.size_a if owner == ALICE else inst.size_b
        return Inner(random_signal(owner, n, rng), go(d - 1), go(d - 1))

    return go(depth)


def random_zero_error_protocol(
    inst: ProblemInstance,
    depth: int,
    rng,
    balanced: bool = False,
    max_size: float = 0.5,
    leaf_prob: float = 0.15,
) -> Node:
    """Random signals for ``depth`` levels, then a revealer cascade wherever the label is still open.

    With ``balanced=True`` each random signal is balanced at the node's belief.
    """

    def go(d, p, rows, cols):
        labels = np.unique(inst.truth[np.ix_(rows, cols)]) if rows and cols else [0]
        if len(labels) == 1:
            return Leaf(int(labels[0]))
        if d == 0 or rng.random() < leaf_prob or p is None:
            return exchange_inputs(inst, rows, cols)
        owner = ALICE if rng.random() < 0.5 else BOB
        n = inst.size_a if owner == ALICE else inst.size_b
        sig = random_signal(owner, n, rng, balanced_at=p if balanced else None, max_size=max_size)
        res = shift(p, sig)
        s = np.array(sig.probs)
        if owner == ALICE:
            r0, r1 = [i for i in rows if s[i] < 1], [i for i in rows if s[i] > 0]
            return Inner(sig, go(d - 1, res.p0, r0, cols), go(d - 1, res.p1, r1, cols))
        c0, c1 = [j for j in cols if s[j] < 1], [j for j in cols if s[j] > 0]
        return Inner(sig, go(d - 1, res.p0, rows, c0), go(d - 1, res.p1, rows, c1))

    return go(depth, inst.mu, list(range(inst.size_a)), list(range(inst.size_b)))
