"""Time the compiled partition-refinement kernel against its pure-Python twin.

Usage: python3 benchmarks/bench_refine.py [--repeat N]

Reports per-call kernel time on every corpus molecule (and on long synthetic
chains), then whole-corpus canonicalization with each backend.
"""

from __future__ import annotations

import argparse
import time
from importlib import resources

from rxnaug import _core
from rxnaug._core import _refine_py
from rxnaug.smiles import canonicalize, parse_smiles
from rxnaug.smiles import canon
from rxnaug.smiles.canon import _csr, atom_invariant


def corpus() -> list[str]:
    text = resources.files("rxnaug.data").joinpath("corpus.smi").read_text()
    return [line.split()[0] for line in text.splitlines() if line.strip() and not line.startswith("#")]


def kernel_inputs(smiles: list[str]):
    out = []
    for s in smiles:
        mol = parse_smiles(s)
        initial = [atom_invariant(mol, a) for a in range(len(mol))]
        lookup = {v: i for i, v in enumerate(sorted(set(initial)))}
        out.append((*_csr(mol), [lookup[v] for v in initial]))
    return out


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if _core.BACKEND != "cython":
        print("compiled kernel not available; only the pure-Python backend is installed")
    compiled = _core.refine_partition
    mols = corpus()
    suites = {"corpus": kernel_inputs(mols),
              "long chains": kernel_inputs(["C" * n for n in (50, 200, 800)]),
              "symmetric rings": kernel_inputs(["c1ccc2ccccc2c1", "C1CC2CCC1CC2", "C1CCCCCCCCCCCCCCCCCCC1"])}

    print(f"{'inputs':<16}{'calls':>6}{'python ms':>12}{'compiled ms':>13}{'speedup':>9}")
    for name, inputs in suites.items():
        for inp in inputs:
            assert compiled(*inp) == _refine_py.refine_partition(*inp)
        py = best_of(lambda: [_refine_py.refine_partition(*i) for i in inputs], args.repeat)
        cy = best_of(lambda: [compiled(*i) for i in inputs], args.repeat)
        print(f"{name:<16}{len(inputs):>6}{py * 1e3:>12.2f}{cy * 1e3:>13.2f}{py / cy:>8.1f}x")

    # end to end: swap the kernel the canonicalizer uses
    parsed = [parse_smiles(s) for s in mols]
    timings = {}
    for label, fn in (("python", _refine_py.refine_partition), ("compiled", compiled)):
        canon.refine_partition = fn
        try:
            timings[label] = best_of(lambda: [canonicalize(m) for m in parsed], args.repeat)
        finally:
            canon.refine_partition = compiled
    print(f"canonicalize {len(parsed)} corpus molecules: python {timings['python'] * 1e3:.1f} ms, "
          f"compiled {timings['compiled'] * 1e3:.1f} ms ({timings['python'] / timings['compiled']:.2f}x)")


if __name__ == "__main__":
    main()
