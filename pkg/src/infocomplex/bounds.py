"""Calculator for the explicit bounds in the computability argument.

Quantities such as Q, W and n overflow any machine float almost immediately,
so they are carried as base-2 logarithms.  The protocol-count estimate
``2^(N 2^d)`` is one level worse again; its log2-log2 value is kept as an
mpmath number.  Hidden ``O(.)`` constants are collapsed into a single
user-chosen ``c`` and every result built on it is flagged heuristic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath

from .belief import binary_entropy

LN2 = math.log(2.0)


def log2_add(x: float, y: float) -> float:
    """log2(2^x + 2^y) without leaving log space."""
    if x == -math.inf:
        return y
    if y == -math.inf:
        return x
    hi, lo = max(x, y), min(x, y)
    return hi + math.log1p(2.0 ** (lo - hi)) / LN2


def capped_entropy(x: float) -> float:
    """h(x) for x <= 1/2, and 1 above: an upper bound on h over [0, x]."""
    return binary_entropy(x) if x <= 0.5 else 1.0


def hessian_bound(gamma: float) -> float:
    """Entrywise bound (2 / ln 2) / gamma on the Hessian of the cost over R_gamma."""
    return 2.0 / (LN2 * gamma)


def lattice_resolution(eps: float, gamma: float, N: int) -> float:
    """Grid parameter M = sqrt(81 U_gamma N / eps) used by signal rounding."""
    return math.sqrt(81.0 * hessian_bound(gamma) * N / eps)


@dataclass(frozen=True)
class QValues:
    log2_closed: float
    log2_derived: float


def compute_Q(eps: float, gamma: float, N: int, size_a: int, size_b: int) -> QValues:
    """Number of distinct signals after rounding, as log2.

    ``log2_closed`` is ``(648 / (eps gamma^3 ln 2))^(N/2) + |A| + |B|``;
    ``log2_derived`` is ``(2 M / gamma)^N + |A| + |B|`` with the
    grid parameter M, which carries an extra factor N inside the power.
    """
    if not (0 < eps <= 1 and 0 < gamma <= 1):
        raise ValueError("eps and gamma must lie in (0, 1]")
    revealers = math.log2(size_a + size_b)
    base = math.log2(648.0) - math.log2(eps) - 3 * math.log2(gamma) - math.log2(LN2)
    closed = log2_add(0.5 * N * base, revealers)
    derived = log2_add(0.5 * N * (base + math.log2(N)), revealers)
    return QValues(closed, derived)


def compute_W(log2_Q: float, eps: float, N: int) -> float:
    """log2 of W = (2 Q log N / eps + Q) log N / eps."""
    if N < 2:
        return -math.inf
    log_n = math.log2(N)
    return log2_Q + math.log2(2 * log_n / eps + 1) + math.log2(log_n / eps)


def _h_mp(x):
    if x == 0 or x == 1:
        return mpmath.mpf(0)
    return -x * mpmath.log(x, 2) - (1 - x) * mpmath.log(1 - x, 2)


def compute_L(eps: float, N: int, rho: float) -> float:
    """Continuity loss ``2 (h(1 - 2 N eps^(1/4) / rho) + 2 (log N + 2) N eps^(1/4) / rho)``.

    Defined for eps in (0, rho^8) with the entropy argument in [0, 1].
    """
    if not 0 < eps < rho**8:
        raise ValueError(f"eps={eps} outside (0, rho^8) = (0, {rho ** 8:.6g})")
    x = 2 * N * eps**0.25 / rho
    if x > 1:
        raise ValueError(f"eps={eps} puts the entropy argument 1 - {x:.6g} below 0")
    return 2 * (binary_entropy(1 - x) + 2 * (math.log2(N) + 2) * N * eps**0.25 / rho)


def compute_U(eps: float, log2_W: float, ic_upper: float, c: float = 1.0) -> float:
    """log2 of ``eps + c (sqrt(W (IC + eps)) + W) + 2 W log(W / eps)``."""
    return compute_Un(0.0, eps, log2_W, ic_upper, c)


def compute_Un(log2_n: float, eps: float, log2_W: float, ic_upper: float, c: float = 1.0) -> float:
    """log2 of ``n eps + c (sqrt(n W (IC + eps)) + W) + 2 W log(W / eps)``."""
    log2_eps = math.log2(eps)
    terms = [log2_n + log2_eps]
    if c > 0:
        c2 = math.log2(c)
        terms.append(c2 + 0.5 * (log2_n + log2_W + math.log2(ic_upper + eps)))
        terms.append(c2 + log2_W)
    ratio = log2_W - log2_eps
    if ratio > 0:
        terms.append(1 + log2_W + math.log2(ratio))
    out = -math.inf
    for t in terms:
        out = log2_add(out, t)
    return out


def _largest_power_of_two(pred, k_max: int = 4000) -> float:
    for k in range(1, k_max):
        x = 2.0**-k
        if pred(x):
            return x
    raise ValueError("no power of two satisfies the constraint")


def choose_chain_epsilon(alpha: float, N: int, rho: float) -> float:
    """Largest 2^-k with L(eps) <= alpha / 2 and eps <= alpha / 2."""

    def ok(e):
        try:
            return e <= alpha / 2 and compute_L(e, N, rho) <= alpha / 2
        except ValueError:
            return False

    return _largest_power_of_two(ok)


def choose_gamma(budget: float, rho: float, reveal_count: int) -> float:
    """Largest 2^-k below rho^2 whose revealing cost ``reveal_count * h(sqrt(gamma) / rho)`` fits the budget."""
    return _largest_power_of_two(
        lambda g: g < rho**2 and reveal_count * capped_entropy(math.sqrt(g) / rho) <= budget
    )


@dataclass
class BoundChain:
    N: int
    rho: float
    alpha: float
    c: float
    eps: float
    stage_eps: float
    gamma: float
    reveal_count: int
    log2_Q_closed: float
    log2_Q_derived: float
    log2_W: float
    L: float
    log2_U: float
    log2_n: float
    log2_Un: float
    log2_d: float
    log2_log2_count: mpmath.mpf
    heuristic: bool = True
    notes: list = field(default_factory=list)

    @property
    def log2_log2_log2_count(self) -> float:
        return float(mpmath.log(self.log2_log2_count, 2))

    def rows(self) -> list[tuple[str, str]]:
        return [
            ("N", str(self.N)),
            ("rho", f"{self.rho:.6g}"),
            ("alpha", f"{self.alpha:.6g}"),
            ("c (heuristic O-constant)", f"{self.c:.6g}"),
            ("eps", f"{self.eps:.6g}"),
            ("per-stage eps", f"{self.stage_eps:.6g}"),
            ("gamma", f"{self.gamma:.6g}"),
            ("log2 Q (closed form)", f"{self.log2_Q_closed:.10g}"),
            ("log2 Q (re-derived)", f"{self.log2_Q_derived:.10g}"),
            ("log2 W", f"{self.log2_W:.10g}"),
            ("L", f"{self.L:.6g}"),
            ("log2 U", f"{self.log2_U:.10g}"),
            ("log2 n", f"{self.log2_n:.10g}"),
            ("log2 U_n", f"{self.log2_Un:.10g}"),
            ("log2 d", f"{self.log2_d:.10g}"),
            ("log2 log2 #protocols", mpmath.nstr(self.log2_log2_count, 12)),
            ("log2 log2 log2 #protocols", f"{self.log2_log2_log2_count:.10g}"),
        ]

    def as_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "log2_log2_count"}
        out["log2_log2_count"] = mpmath.nstr(self.log2_log2_count, 20)
        out["log2_log2_log2_count"] = self.log2_log2_log2_count
        return out


def full_chain(N: int, rho: float, alpha: float, c: float = 1.0, size_a: int | None = None,
               size_b: int | None = None) -> BoundChain:
    """Parameter chain eps -> gamma -> Q -> W -> n -> d for additive accuracy alpha.

    The conversion budget eps is split as eps/5 for each of boundary safety,
    signal splitting and rounding, and 2 eps/5 for bundling.  Without the
    alphabet sizes, |A| + |B| is bounded by N + 1.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if N < 2:
        raise ValueError("the chain needs N >= 2")
    reveal_count = size_a + size_b if size_a and size_b else N + 1
    eps = choose_chain_epsilon(alpha, N, rho)
    stage = eps / 5
    gamma = choose_gamma(stage, rho, reveal_count)
    q = compute_Q(stage, gamma, N, reveal_count, 0) if not (size_a and size_b) else compute_Q(
        stage, gamma, N, size_a, size_b)
    log2_W = compute_W(q.log2_derived, stage, N)
    ic_upper = math.log2(N)
    log2_U = compute_U(eps, log2_W, ic_upper, c)
    log2_n = max(0.0, 2 * (log2_U - math.log2(alpha / 2)))
    log2_Un = compute_Un(log2_n, eps, log2_W, ic_upper, c)
    log2_d = log2_n + math.log2(math.log2(N))
    with mpmath.workdps(30):
        loglog = mpmath.log(N, 2) + mpmath.power(2, mpmath.mpf(log2_d))
    return BoundChain(
        N=N, rho=rho, alpha=alpha, c=c, eps=eps, stage_eps=stage, gamma=gamma,
        reveal_count=reveal_count, log2_Q_closed=q.log2_closed, log2_Q_derived=q.log2_derived,
        log2_W=log2_W, L=compute_L(eps, N, rho), log2_U=log2_U, log2_n=log2_n, log2_Un=log2_Un,
        log2_d=log2_d, log2_log2_count=loglog,
        notes=["W uses the re-derived Q", "c stands in for unspecified O(.) constants"],
    )
