"""Zero-error protocol rewrites with certified information-cost increase.

Each stage returns the new protocol and a ``TransformReceipt`` holding the
exact cost reports before and after, the certified bound on the increase, and
stage-specific diagnostics.  ``pipeline`` chains them:

    perturb (if the prior lacks full support) -> make_safe -> split_signals
    -> round_signals -> bundle
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .belief import (
    ALICE,
    BOB,
    PROB_TOL,
    ProblemInstance,
    Signal,
    binary_entropy,
    conditional_entropies,
    entropy,
    is_gamma_safe,
    make_subsignal,
    marginals,
    node_cost,
    shift,
    signal_cost,
)
from .bounds import capped_entropy, choose_gamma, compute_W, hessian_bound, lattice_resolution
from .protocol import (
    DEFAULT_CAPS,
    Caps,
    CostReport,
    Inner,
    Leaf,
    Node,
    annotate,
    check_caps,
    cost_report,
    distinct_signals,
    exchange_inputs,
)

MEASURE_TOL = 1e-6
W_CLIP = 2**62


# -- receipts -----------------------------------------------------------------


@dataclass(frozen=True)
class TransformBudget:
    alpha: float
    eps_stage: float
    gamma: float
    delta: float | None = None
    T: int = 16
    W: int | None = None

    def __post_init__(self):
        for name in ("alpha", "eps_stage", "gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.delta is not None and self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.T < 1:
            raise ValueError("T must be at least 1")


@dataclass
class TransformReceipt:
    stage: str
    before: CostReport
    after: CostReport
    certified: float
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def measured(self) -> float:
        return self.after.ic_internal - self.before.ic_internal

    @property
    def ok(self) -> bool:
        return self.measured <= self.certified + MEASURE_TOL and self.after.error_prob <= MEASURE_TOL

    def to_doc(self) -> dict:
        return {
            "stage": self.stage,
            "params": self.params,
            "certified": self.certified,
            "measured": self.measured,
            "ok": self.ok,
            "before": self.before.as_dict(),
            "after": self.after.as_dict(),
            "details": self.details,
        }


def _receipt(stage, before, after, inst, certified, params, details=None) -> TransformReceipt:
    return TransformReceipt(stage, cost_report(before, inst), cost_report(after, inst), certified, params, details or {})


def _child_masks(sig: Signal, rows, cols, bit: int):
    s = np.array(sig.probs)
    keep = s > 0 if bit else s < 1
    if sig.owner == ALICE:
        return rows & keep, cols
    return rows, cols & keep


def _full_masks(inst):
    return np.ones(inst.size_a, bool), np.ones(inst.size_b, bool)


def _exchange(inst, rows, cols, first=ALICE) -> Node:
    return exchange_inputs(inst, np.flatnonzero(rows), np.flatnonzero(cols), first)


def _subtree_cost(node: Node, inst, p) -> float:
    """Expected node cost at the leaves of ``node`` started from belief ``p`` (reach 1)."""
    return sum(a.reach * node_cost(a.belief, inst) for a in annotate(node, inst, belief=p).leaves())


# -- perturbation -------------------------------------------------------------


def perturb_distribution(mu, eps: float) -> np.ndarray:
    """Mix ``eps`` of the uniform distribution on the zero set of ``mu`` into it."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    mu = np.asarray(mu, dtype=float)
    zero = mu == 0
    if not zero.any():
        return mu
    out = (1 - eps) * mu
    out[zero] = eps / zero.sum()
    return out


def perturbation_penalty(eps: float, N: int) -> float:
    return 2 * binary_entropy(eps) + eps * math.log2(N)


def perturbation_bounds(root: Node, inst: ProblemInstance, eps: float) -> tuple[float, float]:
    """Bracket for IC under ``inst.mu`` computed from IC under the perturbed prior."""
    from .protocol import ic_transcript

    tilde = inst.with_mu(perturb_distribution(inst.mu, eps))
    ic = ic_transcript(root, tilde)
    return (ic - perturbation_penalty(eps, inst.N)) / (1 - eps), ic / (1 - eps)


def choose_epsilon_for_alpha(alpha: float, N: int) -> float:
    """Largest 2^-k with (2 h(eps) + eps log N) / (1 - eps) < alpha / 2."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    for k in range(1, 2000):
        eps = 2.0**-k
        if perturbation_penalty(eps, N) / (1 - eps) < alpha / 2:
            return eps
    raise ValueError("alpha too small")


# -- boundary safety ----------------------------------------------------------


def choose_reveal_side(p, inst: ProblemInstance, gamma: float) -> tuple[str, int]:
    """Party and input to reveal at an unsafe belief.

    Takes the first pair (row-major) with 0 < p < gamma and picks the side with
    the smaller marginal, Alice on ties.
    """
    p = np.asarray(p, dtype=float)
    bad = np.argwhere((p > 0) & (p < gamma))
    if len(bad) == 0:
        raise ValueError(f"belief is {gamma}-safe; nothing to reveal")
    i, j = (int(x) for x in bad[0])
    pa, pb = marginals(p)
    owner, index, value = (ALICE, i, pa[i]) if pa[i] <= pb[j] else (BOB, j, pb[j])
    limit = math.sqrt(gamma) / inst.rho
    if not value < limit:
        raise RuntimeError(
            f"marginal {value:.6g} of {owner}:{index} is not below sqrt(gamma)/rho = {limit:.6g}; "
            "is the belief reachable from the prior?"
        )
    return owner, index


def safety_bound(inst: ProblemInstance, gamma: float) -> float:
    return (inst.size_a + inst.size_b) * capped_entropy(math.sqrt(gamma) / inst.rho)


def make_safe(root: Node, inst: ProblemInstance, gamma: float, caps: Caps = DEFAULT_CAPS):
    """Insert revealers above every signalling node whose belief has an entry in (0, gamma)."""
    if not 0 < gamma < inst.rho**2:
        raise ValueError(f"gamma={gamma} must lie in (0, rho^2) = (0, {inst.rho ** 2:.6g})")
    inserted = 0

    def go(node, p):
        nonlocal inserted
        if p is None or isinstance(node, Leaf):
            return node
        if not node.signal.is_revealer and not is_gamma_safe(p, gamma):
            owner, i = choose_reveal_side(p, inst, gamma)
            n = inst.size_a if owner == ALICE else inst.size_b
            rev = Signal.revealer(owner, n, i)
            res = shift(p, rev)
            inserted += 1
            return Inner(rev, go(node, res.p0), go(node, res.p1))
        res = shift(p, node.signal)
        c0, c1 = go(node.c0, res.p0), go(node.c1, res.p1)
        if c0 is node.c0 and c1 is node.c1:
            return node
        return Inner(node.signal, c0, c1)

    out = go(root, inst.mu)
    check_caps(out, caps, "make_safe")
    receipt = _receipt(
        "make_safe", root, out, inst, safety_bound(inst, gamma), {"gamma": gamma}, {"revealers_inserted": inserted}
    )
    return out, receipt


# -- splitting into small balanced signals ------------------------------------


def _nearest_endpoint_distance(res) -> float:
    length = float(np.abs(res.p1 - res.p0).max())
    return min(res.P0, res.P1) * length


def _splittable(a) -> bool:
    return (
        isinstance(a.node, Inner)
        and not a.pruned
        and not a.node.signal.is_revealer
        and a.shift.p0 is not None
        and a.shift.p1 is not None
        and float(np.abs(a.shift.p1 - a.shift.p0).max()) > PROB_TOL
    )


def min_walk_distance(root: Node, inst: ProblemInstance) -> float:
    """Smallest distance from a signal's belief to its nearer posterior (inf if nothing to split)."""
    dists = [_nearest_endpoint_distance(a.shift) for a in annotate(root, inst).walk() if _splittable(a)]
    return min(dists, default=math.inf)


def split_delta(root: Node, inst: ProblemInstance, gamma: float) -> float:
    """min(d_min / 10, gamma / 10) with d_min from ``min_walk_distance``."""
    return min(min_walk_distance(root, inst) / 10, gamma / 10)


def split_signals(
    root: Node,
    inst: ProblemInstance,
    gamma: float,
    T: int = 16,
    delta: float | None = None,
    caps: Caps = DEFAULT_CAPS,
):
    """Replace each informative non-revealer signal by a random walk of balanced subsignals.

    The walk moves along the segment between the two posteriors in steps of
    power ``delta`` (or the remaining distance once within ``2 delta`` of an
    endpoint) and falls back to exchanging inputs after ``T`` steps.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    if delta is None:
        delta = split_delta(root, inst, gamma)
    elif not 0 < delta <= min_walk_distance(root, inst) + PROB_TOL:
        raise ValueError(f"delta={delta} must be positive and at most the smallest walk start distance")
    stats = {"walks": 0, "aborts": 0, "derandomized": 0}
    aborts: set[int] = set()

    def go(node, p, rows, cols):
        if p is None or isinstance(node, Leaf):
            return node
        sig = node.signal
        res = shift(p, sig)
        if sig.is_revealer:
            c0 = go(node.c0, res.p0, *_child_masks(sig, rows, cols, 0))
            c1 = go(node.c1, res.p1, *_child_masks(sig, rows, cols, 1))
            return node if (c0 is node.c0 and c1 is node.c1) else Inner(sig, c0, c1)
        if res.p0 is None:
            return derandomize(node, p, rows, cols, 1)
        if res.p1 is None:
            return derandomize(node, p, rows, cols, 0)
        if float(np.abs(res.p1 - res.p0).max()) <= PROB_TOL:
            cost0, cost1 = _subtree_cost(node.c0, inst, p), _subtree_cost(node.c1, inst, p)
            return derandomize(node, p, rows, cols, 0 if cost0 <= cost1 else 1)
        return walk(node, res, rows, cols)

    def derandomize(node, p, rows, cols, bit):
        # Prior-null inputs that could only take the other branch are routed
        # there by revealers; those carry no information under the prior.
        stats["derandomized"] += 1
        sig = node.signal
        out = go(node.child(bit), p, *_child_masks(sig, rows, cols, bit))
        live = rows if sig.owner == ALICE else cols
        n = len(live)
        forbidden = 0.0 if bit else 1.0
        for i in range(n - 1, -1, -1):
            if live[i] and sig.probs[i] == forbidden:
                out = Inner(Signal.revealer(sig.owner, n, i), out, node.child(1 - bit))
        return out

    def walk(node, res, rows, cols):
        stats["walks"] += 1
        sig = node.signal
        p0, p1 = res.p0, res.p1
        length = float(np.abs(p1 - p0).max())
        x0 = res.P1 * length
        conts = {}

        def cont(bit):
            if bit not in conts:
                conts[bit] = go(node.child(bit), p1 if bit else p0, *_child_masks(sig, rows, cols, bit))
            return conts[bit]

        memo = {}

        def state(steps, a, b, c):
            # position x = a*x0 + b*delta + c*length, measured from p0
            key = (steps, a, b, c)
            if key in memo:
                return memo[key]
            x = a * x0 + b * delta + c * length
            if steps == T:
                stats["aborts"] += 1
                out = _exchange(inst, rows, cols)
                aborts.add(id(out))
            else:
                q = p0 + (x / length) * (p1 - p0)
                q = np.clip(q, 0.0, None)
                d = min(x, length - x)
                power = d if d <= 2 * delta else delta
                sub = make_subsignal(q, p0, p1, q, power, sig.owner, fallback=sig.probs)
                if power == x:
                    lo = cont(0)
                    hi = cont(1) if power == length - x else state(steps + 1, 2 * a, 2 * b, 2 * c)
                elif power == length - x:
                    lo = state(steps + 1, 2 * a, 2 * b, 2 * c - 1)
                    hi = cont(1)
                else:
                    lo = state(steps + 1, a, b - 1, c)
                    hi = state(steps + 1, a, b + 1, c)
                out = Inner(sub, lo, hi)
            memo[key] = out
            return out

        return state(0, 1, 0, 0)

    rows, cols = _full_masks(inst)
    out = go(root, inst.mu, rows, cols)
    check_caps(out, caps, "split_signals")
    certified = 0.0
    size_violations = 0
    for a in annotate(out, inst).walk():
        if a.pruned:
            continue
        if id(a.node) in aborts:
            h_ab, h_ba = conditional_entropies(a.belief)
            certified += a.reach * (h_ab + h_ba)
        if isinstance(a.node, Inner) and not a.node.signal.is_revealer:
            if max(abs(x - 0.5) for x in a.node.signal.probs) > delta / gamma + 1e-9:
                size_violations += 1
    stats["size_violations"] = size_violations
    receipt = _receipt(
        "split_signals", root, out, inst, certified, {"gamma": gamma, "T": T, "delta": delta}, stats
    )
    return out, receipt


# -- rounding onto a lattice --------------------------------------------------


@dataclass(frozen=True)
class Lattice:
    """Signals with parameters 1/2 + step * k, |k| <= K."""

    step: float
    K: int

    @classmethod
    def for_params(cls, eps: float, gamma: float, delta: float, N: int) -> "Lattice":
        M = lattice_resolution(eps, gamma, N)
        return cls(delta / M, math.ceil(M / gamma))

    def value(self, k: int) -> float:
        return 0.5 + self.step * k

    def coordinate(self, x: float) -> float:
        return (x - 0.5) / self.step

    def contains(self, sig: Signal, tol: float = 1e-12) -> bool:
        for x in sig.probs:
            k = round(self.coordinate(x))
            if abs(k) > self.K or abs(self.value(k) - x) > tol:
                return False
        return True


def round_signals(
    root: Node,
    inst: ProblemInstance,
    eps: float,
    gamma: float,
    delta: float,
    caps: Caps = DEFAULT_CAPS,
):
    """Move every non-revealer signal onto the lattice, one hypercube vertex at a time.

    Nodes are handled bottom-up; at each node every vertex of the enclosing
    lattice cell is tried and the one with the smallest exact expected leaf
    cost of the resulting subtree wins (ties: smallest k-vector).
    """
    if not delta / gamma < 0.5:
        raise ValueError("delta / gamma must be below 1/2 so the lattice stays inside (0, 1)")
    lat = Lattice.for_params(eps, gamma, delta, inst.N)
    U = hessian_bound(gamma)
    M = lattice_resolution(eps, gamma, inst.N)
    per_signal_cap = 81 * U * delta**2 / M**2
    checks = []

    def coords(sig, p, rows, cols):
        """Candidate k values per coordinate, plus interpolation weights."""
        live_mass = (p.sum(axis=1) if sig.owner == ALICE else p.sum(axis=0)) if p is not None else None
        reach = rows if sig.owner == ALICE else cols
        any_pair = rows.any() and cols.any()
        out = []
        for i, x in enumerate(sig.probs):
            kx = lat.coordinate(x)
            if live_mass is not None and live_mass[i] > 0:
                if abs(kx) > lat.K + 1e-9:
                    raise ValueError(f"{sig.owner} parameter {x} for input {i} lies outside the lattice hull")
                lo = math.floor(kx + 1e-9)
                frac = kx - lo
                if frac <= 1e-9:
                    out.append(((lo, 1.0),))
                else:
                    out.append(((lo, 1 - frac), (lo + 1, frac)))
                continue
            if any_pair and reach[i] and x in (0.0, 1.0):
                raise ValueError(
                    f"{sig.owner} input {i} is reachable without prior mass and has deterministic parameter {x}"
                )
            if not (any_pair and reach[i]):
                out.append(((0, 1.0),))
            else:
                out.append(((int(min(max(round(kx), -lat.K), lat.K)), 1.0),))
        return out

    def go(node, p, rows, cols, reach_prob):
        if isinstance(node, Leaf):
            return node
        sig = node.signal
        res = shift(p, sig) if p is not None else None
        kids = []
        for bit in (0, 1):
            cp = None if res is None else (res.p1 if bit else res.p0)
            cr = 0.0 if res is None or cp is None else reach_prob * (res.P1 if bit else res.P0)
            kids.append(go(node.child(bit), cp, *_child_masks(sig, rows, cols, bit), cr))
        c0, c1 = kids
        if sig.is_revealer:
            return node if (c0 is node.c0 and c1 is node.c1) else Inner(sig, c0, c1)
        options = coords(sig, p, rows, cols)
        vertices = []
        for combo in itertools.product(*options):
            ks = tuple(k for k, _ in combo)
            w = math.prod(wt for _, wt in combo)
            vertices.append((ks, w, Signal(sig.owner, tuple(lat.value(k) for k in ks))))
        if p is None or len(vertices) == 1:
            best = min(vertices, key=lambda v: v[0])[2]
        else:
            base = _subtree_cost(Inner(sig, c0, c1), inst, p)
            scored = sorted((_subtree_cost(Inner(v[2], c0, c1), inst, p), v[0], v[2]) for v in vertices)
            best = scored[0][2]
            E = sum(w * signal_cost(s, p, inst) for _, w, s in vertices) - signal_cost(sig, p, inst)
            checks.append(
                {
                    "reach": reach_prob,
                    "increase": reach_prob * (scored[0][0] - base),
                    "average_bound": reach_prob * E,
                    "hessian_bound": reach_prob * per_signal_cap,
                }
            )
        if best == sig and c0 is node.c0 and c1 is node.c1:
            return node
        return Inner(best, c0, c1)

    rows, cols = _full_masks(inst)
    out = go(root, inst.mu, rows, cols, 1.0)
    check_caps(out, caps, "round_signals")
    details = {
        "lattice_step": lat.step,
        "lattice_K": lat.K,
        "M": M,
        "nodes_rounded": len(checks),
        "average_bound_violations": sum(c["increase"] > c["average_bound"] + 1e-9 for c in checks),
        "hessian_bound_violations": sum(c["average_bound"] > c["hessian_bound"] + 1e-9 for c in checks),
        "distinct_signals": len(distinct_signals(out)),
        "checks": checks,
    }
    receipt = _receipt(
        "round_signals", root, out, inst, eps, {"eps": eps, "gamma": gamma, "delta": delta}, details
    )
    return out, receipt


# -- bundling -----------------------------------------------------------------


def _sender_view(sig: Signal, p) -> np.ndarray:
    """Belief with the sender's input on axis 0."""
    p = np.asarray(p, dtype=float)
    return p if sig.owner == ALICE else p.T


def mutual_info_iid(sig: Signal, p, t: int) -> float:
    """Information t independent copies of ``sig`` carry about the sender's input, given the receiver's.

    The number of ones is a sufficient statistic, so this is a binomial mixture
    computation per receiver input.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0
    q = _sender_view(sig, p)
    s = np.array(sig.probs)
    pmf = binom.pmf(np.arange(t + 1)[None, :], t, s[:, None])
    own = np.array([entropy(row) for row in pmf])
    total = 0.0
    for b in range(q.shape[1]):
        col = q[:, b]
        mass = col.sum()
        if mass <= 0:
            continue
        cond = col / mass
        total += mass * (entropy(cond @ pmf) - float(cond @ own))
    return max(total, 0.0)


def mutual_info_limit(sig: Signal, p) -> float:
    """Limit of ``mutual_info_iid`` as t grows: entropy of the sender's parameter given the receiver's input."""
    q = _sender_view(sig, p)
    groups: dict[float, list[int]] = {}
    for i, x in enumerate(sig.probs):
        groups.setdefault(x, []).append(i)
    merged = np.array([q[idx].sum(axis=0) for idx in groups.values()])
    return max(entropy(merged) - entropy(merged.sum(axis=0)), 0.0)


def choose_bundle_size(sig: Signal, p, eps: float, Q: int, max_uses: int | None = None, t_limit: int = 10**6):
    """Bundle length and case label (1, 2 or 3) at belief ``p``.

    With ``max_uses`` the length never exceeds the number of times the signal
    can still be used; a cut-short scan is reported as case 3.
    """
    hi, lo = eps / Q, eps / (2 * Q)
    if mutual_info_iid(sig, p, 1) >= hi:
        return 1, 1
    cap = t_limit if max_uses is None else max_uses
    if mutual_info_limit(sig, p) <= lo:
        if max_uses is None:
            raise ValueError("case 3 needs max_uses")
        return max(max_uses, 1), 3
    for t in range(1, cap + 1):
        if mutual_info_iid(sig, p, t) >= lo:
            return t, 2
    if max_uses is None:
        raise RuntimeError(f"no bundle length up to {t_limit} reaches eps/2Q")
    return max(max_uses, 1), 3


def alternation_cap(Q: int, eps: float, N: int) -> int:
    lw = compute_W(math.log2(Q), eps, N)
    if lw == -math.inf:
        return 0
    return W_CLIP if lw >= 62 else int(math.floor(2.0**lw + 1e-9))


def bundle(
    root: Node,
    inst: ProblemInstance,
    eps: float,
    Q_count: int | None = None,
    W: int | None = None,
    caps: Caps = DEFAULT_CAPS,
):
    """Send signals in bundles of copies and read later uses from unused copies.

    Each path keeps a queue of unused outcomes per signal.  After ``W``
    bundles the parties fall back to exchanging inputs, starting with the
    last speaker so no extra alternation appears.
    """
    Q = Q_count if Q_count is not None else max(len(distinct_signals(root)), 1)
    if W is None:
        W = alternation_cap(Q, eps, inst.N)
    uses_memo: dict[tuple[int, Signal], int] = {}
    bundles = []
    stats = {"aborts": 0}

    def max_uses(node, sig):
        key = (id(node), sig)
        if key not in uses_memo:
            if isinstance(node, Leaf):
                uses_memo[key] = 0
            else:
                here = 1 if node.signal == sig else 0
                uses_memo[key] = here + max(max_uses(node.c0, sig), max_uses(node.c1, sig))
        return uses_memo[key]

    def go(node, p, rows, cols, queues, count, last):
        while isinstance(node, Inner) and queues.get(node.signal):
            pending = queues[node.signal]
            queues = {**queues, node.signal: pending[1:]}
            node = node.child(pending[0])
        if isinstance(node, Leaf):
            return node
        sig = node.signal
        if count >= W:
            stats["aborts"] += 1
            return _exchange(inst, rows, cols, last or ALICE)
        if p is None:
            t, case = 1, 0
        else:
            t, case = choose_bundle_size(sig, p, eps, Q, max_uses(node, sig))
            bundles.append({"t": t, "case": case, "info": mutual_info_iid(sig, p, t)})

        def emit(bits, q, r, c):
            if len(bits) == t:
                rest = {**queues, sig: bits[1:]}
                return go(node.child(bits[0]), q, r, c, rest, count + 1, sig.owner)
            res = shift(q, sig) if q is not None else None
            kids = []
            for bit in (0, 1):
                cq = None if res is None else (res.p1 if bit else res.p0)
                kids.append(emit(bits + (bit,), cq, *_child_masks(sig, r, c, bit)))
            return Inner(sig, kids[0], kids[1])

        return emit((), p, rows, cols)

    rows, cols = _full_masks(inst)
    out = go(root, inst.mu, rows, cols, {}, 0, None)
    check_caps(out, caps, "bundle")
    excess = [b for b in bundles if b["case"] == 2 and b["info"] > eps / Q + 1e-12]
    details = {
        "Q": Q,
        "W": W,
        "bundles": len(bundles),
        "cases": {str(k): sum(b["case"] == k for b in bundles) for k in (1, 2, 3)},
        "max_t": max((b["t"] for b in bundles), default=0),
        "case2_excess_violations": len(excess),
        "aborts": stats["aborts"],
    }
    receipt = _receipt("bundle", root, out, inst, 2 * eps, {"eps": eps, "Q": Q, "W": W}, details)
    return out, receipt


# -- pipeline -----------------------------------------------------------------


class StageError(RuntimeError):
    def __init__(self, stage: str, params: dict, cause: Exception):
        super().__init__(f"{stage} failed with {params}: {cause}")
        self.stage = stage
        self.params = params
        self.cause = cause


@dataclass
class PipelineResult:
    protocol: Node
    receipts: list[TransformReceipt]
    budget: TransformBudget
    overall: TransformReceipt
    perturb_eps: float | None = None

    def to_doc(self) -> dict:
        from .documents import protocol_to_doc

        return {
            "budget": dict(self.budget.__dict__),
            "perturb_eps": self.perturb_eps,
            "stages": [r.to_doc() for r in self.receipts],
            "overall": self.overall.to_doc(),
            "protocol": protocol_to_doc(self.protocol),
        }


def pipeline(
    inst: ProblemInstance,
    alpha: float,
    seed: Node | None = None,
    T: int = 16,
    eps_stage: float | None = None,
    caps: Caps = DEFAULT_CAPS,
) -> PipelineResult:
    """Run every stage on a seed protocol (default: exchange inputs).

    Stage budgets default to alpha/10 each (twice that certified for
    bundling); with a perturbed prior they shrink by (1 - eps) so that the
    total guarantee under the original prior is alpha.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    seed = exchange_inputs(inst) if seed is None else seed
    receipts = []
    work, eps_p = inst, None
    if not inst.full_support:
        eps_p = choose_epsilon_for_alpha(alpha, inst.N)
        work = inst.with_mu(perturb_distribution(inst.mu, eps_p))
        before, after = cost_report(seed, inst), cost_report(seed, work)
        receipts.append(
            TransformReceipt("perturb", before, after, perturbation_penalty(eps_p, inst.N), {"eps": eps_p})
        )
    scale = 1.0 if eps_p is None else 1 - eps_p
    b = (alpha / 10 if eps_stage is None else eps_stage) * scale
    gamma = choose_gamma(b, work.rho, work.size_a + work.size_b)
    budget = TransformBudget(alpha=alpha, eps_stage=b, gamma=gamma, T=T)

    def run(stage, fn, params):
        try:
            return fn()
        except (ValueError, RuntimeError) as exc:
            raise StageError(stage, params, exc) from exc

    pi = seed
    pi, r = run("make_safe", lambda: make_safe(pi, work, gamma, caps), {"gamma": gamma})
    receipts.append(r)
    pi, r = run("split_signals", lambda: split_signals(pi, work, gamma, T, caps=caps), {"gamma": gamma, "T": T})
    receipts.append(r)
    delta = r.params["delta"]
    pi, r = run("round_signals", lambda: round_signals(pi, work, b, gamma, delta, caps), {"eps": b, "delta": delta})
    receipts.append(r)
    pi, r = run("bundle", lambda: bundle(pi, work, b, caps=caps), {"eps": b})
    receipts.append(r)
    budget = TransformBudget(alpha=alpha, eps_stage=b, gamma=gamma, delta=delta, T=T, W=r.params["W"])
    total = sum(x.certified for x in receipts)
    overall = _receipt("pipeline", seed, pi, inst, total / scale, {"alpha": alpha})
    return PipelineResult(pi, receipts, budget, overall, eps_p)
