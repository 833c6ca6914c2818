"""Synthetic reaction sets generated from a handful of named-reaction templates.

Each template pairs reactant patterns with a product pattern over R-group
slots; every combination of library entries gives one retrosynthesis record
(product -> reactants) labeled with the template name.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .reactions import ReactionRecord, parse_reaction

# R groups written so that "{R}X" attaches X to the last atom of R
ACYL = ["C", "CC", "CCC", "CC(C)", "CC(C)(C)", "C1CC1", "c1ccccc1", "c1ccc(F)cc1", "c1ccc(Cl)cc1",
        "c1ccc(OC)cc1", "c1ccncc1", "c1ccoc1", "C=C", "CCOC(=O)C"]
# N-substituents written so that "N{R}" is the amine
AMINE = ["C", "CC", "(C)C", "Cc1ccccc1", "C1CC1", "CCO", "CC(C)C", "c1ccccc1", "Cc1ccncc1",
         "CCN(C)C", "[C@@H](C)c1ccccc1", "[C@H](C)c1ccccc1", "CC#N", "CCC"]
ALKYL = ["C", "CC", "CCC", "CC(C)C", "Cc1ccccc1", "CC=C", "CCOC", "CC(F)(F)F"]
ARYL = ["c1ccccc1", "c1ccc(C)cc1", "c1ccc(F)cc1", "c1ccncc1", "c1cccnc1", "c1ccc(C#N)cc1",
        "c1ccc(OC)cc1", "c1ccsc1", "c1ccc(Cl)cc1", "c1cncnc1"]


@dataclass(frozen=True)
class Template:
    name: str
    reactants: tuple[str, ...]
    product: str
    slots: tuple[tuple[str, ...], ...]

    def records(self) -> list[tuple[str, str]]:
        out = []
        for values in itertools.product(*self.slots):
            fill = dict(zip("abc", values))
            out.append((".".join(r.format(**fill) for r in self.reactants), self.product.format(**fill)))
        return out


TEMPLATES = (
    Template("amide_coupling", ("{a}C(=O)O", "N{b}"), "{a}C(=O)N{b}", (tuple(ACYL), tuple(AMINE))),
    Template("esterification", ("{a}C(=O)O", "O{b}"), "{a}C(=O)O{b}", (tuple(ACYL), tuple(ALKYL))),
    Template("reductive_amination", ("{a}C=O", "N{b}"), "{a}CN{b}", (tuple(ACYL), tuple(AMINE))),
    Template("boc_deprotection", ("CC(C)(C)OC(=O)N{a}",), "N{a}", (tuple(AMINE),)),
    Template("nitro_reduction", ("{a}[N+](=O)[O-]",), "{a}N", (tuple(ARYL),)),
    Template("suzuki_coupling", ("{a}Br", "OB(O){b}"), "{a}{b}", (tuple(ARYL), tuple(ARYL))),
    Template("williamson_ether", ("{a}O", "Br{b}"), "{a}O{b}", (tuple(ARYL), tuple(ALKYL))),
)


def toy_reactions(seed: int = 0) -> list[ReactionRecord]:
    """Every template instance as a retrosynthesis record, shuffled by ``seed``.

    Records carry ids "toy<k>" (stable across seeds) and the template name as
    class label; instances that coincide after canonicalization appear once.
    """
    records: list[ReactionRecord] = []
    seen = set()
    for template in TEMPLATES:
        for reactants, product in template.records():
            rec = parse_reaction(f"{reactants}>>{product}", id=f"toy{len(seen)}")
            key = rec.dedup_key()
            if key in seen:
                continue
            seen.add(key)
            records.append(ReactionRecord(rec.reactants, rec.reagents, rec.products, rec.direction,
                                          template.name, rec.id))
    random.Random(seed).shuffle(records)
    return records


def toy_split(n_train: int, n_test: int, seed: int = 0) -> tuple[list[ReactionRecord], list[ReactionRecord]]:
    records = toy_reactions(seed)
    if n_train + n_test > len(records):
        raise ValueError(f"the grammar yields only {len(records)} reactions")
    return records[:n_train], records[n_train:n_train + n_test]
