"""Information cost of two-party protocols: evaluation, certified rewrites and exhaustive search."""

from .belief import ALICE, BOB, ProblemInstance, Signal, node_cost, shift, signal_cost
from .protocol import Caps, Inner, Leaf, annotate, cost_report, exchange_inputs, ic_transcript, verify_zero_error

__all__ = [
    "ALICE",
    "BOB",
    "Caps",
    "Inner",
    "Leaf",
    "ProblemInstance",
    "Signal",
    "annotate",
    "cost_report",
    "exchange_inputs",
    "ic_transcript",
    "node_cost",
    "shift",
    "signal_cost",
    "verify_zero_error",
]
