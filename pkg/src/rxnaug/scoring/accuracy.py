"""String-level accuracies used while monitoring training."""

from __future__ import annotations


def character_accuracy(predicted: str, target: str) -> float:
    """Positional matches divided by the longer length ("CC" vs "CN" is 0.5)."""
    longest = max(len(predicted), len(target))
    if longest == 0:
        return 1.0
    return sum(a == b for a, b in zip(predicted, target)) / longest


def sequence_accuracy(predicted: str, target: str) -> int:
    return int(predicted == target)
