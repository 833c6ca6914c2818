"""Pure-Python partition refinement (reference twin of ``_refine.pyx``)."""

from __future__ import annotations

from typing import Sequence


def refine_partition(
    indptr: Sequence[int],
    indices: Sequence[int],
    codes: Sequence[int],
    classes: Sequence[int],
) -> list[int]:
    """Iterate neighborhood refinement until the number of classes is stable.

    The graph is given in CSR form: neighbors of atom ``a`` are
    ``indices[indptr[a]:indptr[a+1]]`` with bond labels ``codes`` (0..7).
    Each round keys an atom by ``(class, sorted(8*class[nb] + code))`` and
    relabels classes densely in key order, so the result only depends on the
    labelled graph, never on atom numbering.
    """
    n = len(classes)
    cls = _dense(list(classes))
    count = len(set(cls))
    while True:
        keys = []
        for a in range(n):
            sig = sorted(cls[indices[k]] * 8 + codes[k] for k in range(indptr[a], indptr[a + 1]))
            keys.append((cls[a], tuple(sig)))
        order = {key: i for i, key in enumerate(sorted(set(keys)))}
        new = [order[key] for key in keys]
        if len(order) == count:
            return new
        cls, count = new, len(order)


def _dense(values: list[int]) -> list[int]:
    lookup = {v: i for i, v in enumerate(sorted(set(values)))}
    return [lookup[v] for v in values]
