"""Beliefs, signals and the information-cost functionals defined on them.

A belief is an ``(|A|, |B|)`` array of probabilities over input pairs.  A
signal is a one-bit message whose bias depends on the sender's input only,
so sending it rescales the rows (Alice) or the columns (Bob) of the belief.
All logarithms are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ALICE = "A"
BOB = "B"

PROB_TOL = 1e-9
INFO_TOL = 1e-6
SUM_TOL = 1e-12


class SupportError(ValueError):
    """A belief puts mass on an input pair the prior rules out."""


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Truth table ``truth[a, b]`` and prior ``mu[a, b]``.

    Labels are 0/1 for ordinary instances; tensor powers store the tuple of
    per-copy outputs packed into one integer.
    """

    truth: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        truth = np.array(self.truth, dtype=np.int64)
        mu = np.array(self.mu, dtype=float)
        if truth.ndim != 2 or mu.shape != truth.shape:
            raise ValueError(f"truth table {truth.shape} and prior {mu.shape} must be matching 2-d arrays")
        if truth.size == 0:
            raise ValueError("alphabets must be nonempty")
        if np.any(truth < 0):
            raise ValueError("labels must be nonnegative")
        if np.any(mu < 0) or not np.all(np.isfinite(mu)):
            raise ValueError("prior entries must be finite and nonnegative")
        if abs(mu.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"prior sums to {mu.sum():.17g}, not 1")
        truth.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "mu", mu)

    @property
    def size_a(self) -> int:
        return self.truth.shape[0]

    @property
    def size_b(self) -> int:
        return self.truth.shape[1]

    @property
    def N(self) -> int:
        return self.truth.size

    @property
    def rho(self) -> float:
        """Smallest strictly positive prior entry."""
        return float(self.mu[self.mu > 0].min())

    @property
    def full_support(self) -> bool:
        return bool(np.all(self.mu > 0))

    def with_mu(self, mu) -> "ProblemInstance":
        return ProblemInstance(self.truth, mu)


def check_belief(p, inst: ProblemInstance | None = None) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if inst is not None and p.shape != inst.mu.shape:
        raise ValueError(f"belief shape {p.shape} does not match instance {inst.mu.shape}")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("belief entries must lie in [0, 1]")
    if abs(p.sum() - 1.0) > SUM_TOL:
        raise ValueError(f"belief sums to {p.sum():.17g}, not 1")
    return p


# -- information theory -------------------------------------------------------


def entropy(p) -> float:
    """Shannon entropy of a (possibly multi-dimensional) distribution."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    # log1p keeps the (1 - x) term accurate for tiny x
    return -x * math.log2(x) - (1 - x) * math.log1p(-x) / math.log(2)


def kl(P, Q) -> float:
    """D(P || Q) in bits with 0 log 0 = 0.  Raises if Q does not dominate P."""
    P = np.asarray(P, dtype=float).ravel()
    Q = np.asarray(Q, dtype=float).ravel()
    if P.shape != Q.shape:
        raise ValueError("distributions must have the same length")
    mask = P > 0
    if np.any(Q[mask] <= 0):
        raise SupportError("Q does not dominate P")
    return float((P[mask] * np.log2(P[mask] / Q[mask])).sum())


# -- signals ------------------------------------------------------------------


@dataclass(frozen=True)
class Signal:
    """Owner ('A' or 'B') and one Bernoulli parameter per owner input.

    Equality and hashing are exact on ``(owner, probs)``, which is what
    bundling uses as signal identity.
    """

    owner: str
    probs: tuple

    def __post_init__(self):
        if self.owner not in (ALICE, BOB):
            raise ValueError(f"owner must be 'A' or 'B', got {self.owner!r}")
        probs = tuple(float(x) for x in self.probs)
        if not probs:
            raise ValueError("signal needs at least one parameter")
        if any(not 0.0 <= x <= 1.0 for x in probs):
            raise ValueError(f"signal parameters must lie in [0, 1]: {probs}")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def revealer(cls, owner: str, n: int, index: int) -> "Signal":
        return cls(owner, tuple(1.0 if i == index else 0.0 for i in range(n)))

    @classmethod
    def constant(cls, owner: str, n: int, value: float = 0.5) -> "Signal":
        return cls(owner, (value,) * n)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.probs)

    @property
    def is_revealer(self) -> bool:
        return self.probs.count(1.0) == 1 and self.probs.count(0.0) == len(self.probs) - 1

    @property
    def revealed_index(self) -> int | None:
        return self.probs.index(1.0) if self.is_revealer else None

    def outcome_weights(self, shape) -> np.ndarray:
        """Pr[outcome 1 | a, b] broadcast over a belief of the given shape."""
        axis = 0 if self.owner == ALICE else 1
        if len(self.probs) != shape[axis]:
            raise ValueError(
                f"signal for {self.owner} has {len(self.probs)} parameters, alphabet has {shape[axis]}"
            )
        s = self.vector
        return s[:, None] if axis == 0 else s[None, :]


def signal_size(sig: Signal) -> float:
    return max(abs(0.5 - x) for x in sig.probs)


@dataclass(frozen=True)
class ShiftResult:
    """Outcome probabilities and posteriors; a posterior is None when its outcome has probability 0."""

    P0: float
    P1: float
    p0: np.ndarray | None
    p1: np.ndarray | None

    def branches(self):
        return ((self.P0, self.p0), (self.P1, self.p1))


def _normalize(joint: np.ndarray, mass: float) -> np.ndarray:
    q = joint / mass
    drift = abs(q.sum() - 1.0)
    if drift >= PROB_TOL:
        raise ArithmeticError(f"posterior renormalization drift {drift:.3g}")
    return q / q.sum()


def shift(p, sig: Signal) -> ShiftResult:
    """Bayes update of belief ``p`` on observing each outcome of ``sig``."""
    p = np.asarray(p, dtype=float)
    w1 = sig.outcome_weights(p.shape)
    joint1 = w1 * p
    joint0 = (1.0 - w1) * p
    P1 = float(joint1.sum())
    P0 = float(joint0.sum())
    total = P0 + P1
    P0, P1 = P0 / total, P1 / total
    return ShiftResult(
        P0,
        P1,
        _normalize(joint0, joint0.sum()) if P0 > 0 else None,
        _normalize(joint1, joint1.sum()) if P1 > 0 else None,
    )


def signal_power(sig: Signal, p) -> float:
    p = np.asarray(p, dtype=float)
    res = shift(p, sig)
    return max(
        (float(np.abs(p - q).max()) for _, q in res.branches() if q is not None),
        default=0.0,
    )


def is_balanced(sig: Signal, p, tol: float = SUM_TOL) -> bool:
    return abs(shift(p, sig).P1 - 0.5) <= tol


# -- cost functionals ---------------------------------------------------------


def _conditional_divergence(p: np.ndarray, mu: np.ndarray, axis: int) -> float:
    # E over the kept coordinate of D(p(other | kept) || mu(other | kept)).
    # Works for unnormalized p as well, which the Hessian checks rely on.
    p_m = p.sum(axis=axis, keepdims=True)
    mu_m = mu.sum(axis=axis, keepdims=True)
    mask = p > 0
    pp = p[mask]
    ratio_p = pp / np.broadcast_to(p_m, p.shape)[mask]
    ratio_mu = mu[mask] / np.broadcast_to(mu_m, p.shape)[mask]
    return float((pp * (np.log2(ratio_p) - np.log2(ratio_mu))).sum())


def _prior(inst_or_mu) -> np.ndarray:
    return inst_or_mu.mu if isinstance(inst_or_mu, ProblemInstance) else np.asarray(inst_or_mu, dtype=float)


def node_cost(p, inst) -> float:
    """Internal cost of a belief relative to the prior.

    ``E_a D(p(b|a) || mu(b|a)) + E_b D(p(a|b) || mu(a|b))``
    """
    p = np.asarray(p, dtype=float)
    mu = _prior(inst)
    if p.shape != mu.shape:
        raise ValueError(f"belief shape {p.shape} does not match prior {mu.shape}")
    if np.any((p > 0) & (mu <= 0)):
        raise SupportError("belief is positive where the prior is zero")
    return _conditional_divergence(p, mu, axis=1) + _conditional_divergence(p, mu, axis=0)


def external_node_cost(p, inst) -> float:
    p = np.asarray(p, dtype=float)
    mu = _prior(inst)
    if p.shape != mu.shape:
        raise ValueError(f"belief shape {p.shape} does not match prior {mu.shape}")
    try:
        return kl(p, mu)
    except SupportError:
        raise SupportError("belief is positive where the prior is zero") from None


def signal_cost(sig: Signal, p, inst, external: bool = False) -> float:
    cost = external_node_cost if external else node_cost
    res = shift(p, sig)
    total = -cost(p, inst)
    for P, q in res.branches():
        if q is not None:
            total += P * cost(q, inst)
    return total


def marginals(p) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=float)
    return p.sum(axis=1), p.sum(axis=0)


def conditional_entropies(p) -> tuple[float, float]:
    """(H(A|B), H(B|A)) under belief p."""
    pa, pb = marginals(p)
    h_ab = entropy(p)
    return h_ab - entropy(pb), h_ab - entropy(pa)


def is_gamma_safe(p, gamma: float) -> bool:
    p = np.asarray(p)
    return bool(np.all((p == 0) | (p >= gamma)))


# -- subsignals ---------------------------------------------------------------


def make_subsignal(p, p0, p1, q, target_power: float, owner: str, fallback=None) -> Signal:
    """Balanced signal at ``q`` that moves ``target_power`` (L-inf) along the p0-p1 segment.

    Outcome 1 moves toward ``p1``.  ``p`` is the belief the original signal
    was sent from; it must lie on the segment too.  Owner rows (columns for
    Bob) with no mass at ``q`` take their parameter from ``fallback`` when
    given, otherwise 1/2.
    """
    p, p0, p1, q = (np.asarray(x, dtype=float) for x in (p, p0, p1, q))
    direction = p1 - p0
    length = float(np.abs(direction).max())
    if length == 0.0:
        raise ValueError("degenerate segment: p0 == p1")
    t_q = _segment_position(q, p0, direction)
    _segment_position(p, p0, direction)
    room = min(t_q, 1.0 - t_q) * length
    if target_power < 0 or target_power > room + PROB_TOL:
        raise ValueError(f"power {target_power} exceeds distance {room} to the nearest endpoint")
    axis = 0 if owner == ALICE else 1
    n = q.shape[axis]
    if target_power == 0:
        return Signal.constant(owner, n)
    q1 = q + target_power * direction / length
    q1 = np.clip(q1, 0.0, None)
    probs = np.full(n, 0.5) if fallback is None else np.array(fallback, dtype=float)
    for i in range(n):
        qi = q[i, :] if axis == 0 else q[:, i]
        q1i = q1[i, :] if axis == 0 else q1[:, i]
        live = qi > 0
        if not live.any():
            continue
        vals = q1i[live] / (2.0 * qi[live])
        if vals.max() - vals.min() > PROB_TOL:
            raise ValueError(
                f"segment is not generated by a signal of {owner}: parameter for input {i} varies by "
                f"{vals.max() - vals.min():.3g}"
            )
        probs[i] = vals.mean()
    return Signal(owner, tuple(np.clip(probs, 0.0, 1.0)))


def _segment_position(x, start, direction) -> float:
    t = float(np.dot((x - start).ravel(), direction.ravel()) / np.dot(direction.ravel(), direction.ravel()))
    off = float(np.abs(x - (start + t * direction)).max())
    if off > PROB_TOL or t < -PROB_TOL or t > 1 + PROB_TOL:
        raise ValueError(f"point is off the segment (offset {off:.3g}, position {t:.6g})")
    return min(max(t, 0.0), 1.0)
