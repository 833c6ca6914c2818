"""Reaction records: parsing, cleaning, fragment trimming and pair files."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .smiles import Molecule, SmilesError, canonicalize, parse_smiles
from .smiles.canon import fragment_size_key

RETRO = "retro"
FORWARD = "forward"
FORMATS = ("separated", "mixed", "pair")

# marks a forward (reactants -> product) line in mixed-direction pair files
FORWARD_PREFIX = "."


class ReactionParseError(ValueError):
    """A reaction line could not be parsed.

    ``role`` and ``fragment_index`` locate the offending SMILES when the
    failure is inside one fragment.
    """

    def __init__(self, message: str, line: str, role: str | None = None, fragment_index: int | None = None):
        self.line = line
        self.role = role
        self.fragment_index = fragment_index
        where = f" ({role} fragment {fragment_index})" if role is not None else ""
        super().__init__(f"{message}{where}: {line!r}")


class DatasetFormatError(ValueError):
    def __init__(self, message: str, lineno: int):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


def _join(mols: Iterable[Molecule]) -> Molecule:
    """Disjoint union of molecules, atom order preserved."""
    atoms, bonds, offset = [], [], 0
    for mol in mols:
        for at in mol.atoms:
            if at.chiral_ref:
                at = replace(at, chiral_ref=tuple(x + offset if x >= 0 else x for x in at.chiral_ref))
            atoms.append(at)
        bonds.extend(replace(b, a=b.a + offset, b=b.b + offset) for b in mol.bonds)
        offset += len(mol)
    return Molecule(tuple(atoms), tuple(bonds))


def canonical_side(mols: Sequence[Molecule]) -> str:
    """Canonical text of a set of molecules written as one dot-joined string."""
    return canonicalize(_join(mols)) if mols else ""


@dataclass(frozen=True)
class ReactionRecord:
    reactants: tuple[Molecule, ...]
    reagents: tuple[Molecule, ...] = ()
    products: tuple[Molecule, ...] = ()
    direction: str = RETRO
    class_label: str | None = None
    id: str | None = None

    def __post_init__(self):
        if self.direction not in (RETRO, FORWARD):
            raise ValueError(f"direction must be {RETRO!r} or {FORWARD!r}")

    @property
    def precursors(self) -> tuple[Molecule, ...]:
        return self.reactants + self.reagents

    def sides(self, include_reagents: bool = True) -> tuple[tuple[Molecule, ...], tuple[Molecule, ...]]:
        """(source molecules, target molecules) for this record's direction."""
        pre = self.precursors if include_reagents else self.reactants
        if self.direction == RETRO:
            return self.products, pre
        return pre, self.products

    @cached_property
    def canonical_roles(self) -> tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]:
        """Canonical fragment strings per role, sorted within each role."""
        def role(mols):
            return tuple(sorted(canonicalize(m) for m in mols))

        return role(self.reactants), role(self.reagents), role(self.products)

    def canonical_reaction(self) -> str:
        r, g, p = self.canonical_roles
        return f"{'.'.join(r)}>{'.'.join(g)}>{'.'.join(p)}"

    def dedup_key(self) -> tuple:
        return self.canonical_roles + (self.direction,)

    def canonical_pair(self, include_reagents: bool = True) -> tuple[str, str]:
        src, tgt = self.sides(include_reagents)
        source = canonical_side(src)
        if self.direction == FORWARD:
            source = FORWARD_PREFIX + source
        return source, canonical_side(tgt)


def _parse_side(text: str, role: str, line: str) -> tuple[Molecule, ...]:
    if not text:
        return ()
    out = []
    for idx, piece in enumerate(text.split(".")):
        try:
            mol = parse_smiles(piece)
        except SmilesError as exc:
            raise ReactionParseError(f"unparseable SMILES {piece!r} ({exc})", line, role, idx) from exc
        out.append(mol)
    return tuple(out)


def _split_columns(line: str) -> tuple[str | None, str, str | None]:
    """(id, reaction, class label) from ``[id,]reaction[,class]``."""
    cols = [c.strip() for c in line.split(",")]
    rxn_cols = [i for i, c in enumerate(cols) if ">" in c]
    if len(rxn_cols) != 1:
        raise ReactionParseError("expected exactly one reaction column", line)
    i = rxn_cols[0]
    if i > 1 or len(cols) - i > 2:
        raise ReactionParseError("too many columns", line)
    rid = cols[0] if i == 1 else None
    label = cols[i + 1] if len(cols) > i + 1 else None
    return rid or None, cols[i], label or None


def parse_reaction(line: str, format: str = "separated", *, id: str | None = None) -> ReactionRecord:
    """Parse one reaction line.

    ``separated``: ``reactants>reagents>products`` (``>>`` when no reagents).
    ``mixed``: same text, but reagents are pooled into the reactants.
    ``pair``: ``source,target`` training line; a source starting with ``.``
    is a forward line (reactants to product), otherwise retro.
    Separated and mixed lines may carry a leading id column and a trailing
    class column; pair lines may carry a trailing class column.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    line = line.strip()
    if not line:
        raise ReactionParseError("empty line", line)

    if format == "pair":
        cols = [c.strip() for c in line.split(",")]
        if len(cols) not in (2, 3):
            raise ReactionParseError("pair lines need source,target[,class]", line)
        source, target = cols[0], cols[1]
        label = cols[2] if len(cols) == 3 and cols[2] else None
        forward = source.startswith(FORWARD_PREFIX)
        if forward:
            source = source[len(FORWARD_PREFIX):]
        if not source or not target:
            raise ReactionParseError("empty source or target", line)
        if forward:
            return ReactionRecord(_parse_side(source, "reactant", line), (), _parse_side(target, "product", line),
                                  FORWARD, label, id)
        return ReactionRecord(_parse_side(target, "reactant", line), (), _parse_side(source, "product", line),
                              RETRO, label, id)

    rid, rxn, label = _split_columns(line)
    parts = rxn.split(">")
    if len(parts) != 3:
        raise ReactionParseError("reaction needs two '>' separators", line)
    reactant_text, reagent_text, product_text = parts
    if not product_text:
        raise ReactionParseError("empty product side", line)
    reactants = _parse_side(reactant_text, "reactant", line)
    reagents = _parse_side(reagent_text, "reagent", line)
    products = _parse_side(product_text, "product", line)
    if format == "mixed":
        reactants, reagents = reactants + reagents, ()
    return ReactionRecord(reactants, reagents, products, RETRO, label, id if id is not None else rid)


# --- cleaning ----------------------------------------------------------------


@dataclass(frozen=True)
class FilterRules:
    """Dataset cleaning thresholds.

    A reaction is dropped when its reactants hold fewer than
    ``min_reactant_atoms`` heavy atoms in total, when the canonical string of
    its largest product is shorter than ``min_product_chars``, when it has no
    products (``drop_empty_products``) or only single-atom ions as products
    (``drop_single_ion_products``), or when it repeats an earlier reaction
    (``deduplicate``).
    """

    min_reactant_atoms: int = 5
    min_product_chars: int = 5
    drop_empty_products: bool = True
    deduplicate: bool = True
    drop_single_ion_products: bool = True

    def __post_init__(self):
        if self.min_reactant_atoms < 0 or self.min_product_chars < 0:
            raise ValueError("filter thresholds must be non-negative")


@dataclass(frozen=True)
class Rejection:
    record_id: str
    rule: str
    detail: str = ""


def _record_label(record: ReactionRecord, index: int) -> str:
    return record.id if record.id is not None else f"#{index}"


def _is_single_ion(mol: Molecule) -> bool:
    return len(mol) == 1 and mol.atoms[0].charge != 0


def check_record(record: ReactionRecord, rules: FilterRules) -> tuple[str, str] | None:
    """First rule the record violates as ``(rule, detail)``, or None."""
    if not record.reactants:
        return "no_reactants", "reactant side is empty"
    if not record.products:
        if rules.drop_empty_products:
            return "empty_products", "product side is empty"
    elif rules.drop_single_ion_products and all(_is_single_ion(p) for p in record.products):
        return "single_ion_products", "products are single ions only"
    heavy = sum(m.heavy_atom_count for m in record.reactants)
    if heavy < rules.min_reactant_atoms:
        return "min_reactant_atoms", f"{heavy} reactant heavy atoms < {rules.min_reactant_atoms}"
    if record.products:
        sized = [(p.heavy_atom_count, canonicalize(p)) for p in record.products]
        largest = min(sized, key=lambda ht: fragment_size_key(*ht))[1]
        if len(largest) < rules.min_product_chars:
            return "min_product_chars", f"largest product {largest!r} shorter than {rules.min_product_chars}"
    return None


def filter_dataset(records: Sequence[ReactionRecord], rules: FilterRules = FilterRules()
                   ) -> tuple[list[ReactionRecord], list[Rejection]]:
    """Drop records violating ``rules``; rejections are returned, not raised."""
    kept, log, seen = [], [], set()
    for i, rec in enumerate(records):
        failed = check_record(rec, rules)
        if failed is not None:
            log.append(Rejection(_record_label(rec, i), *failed))
            continue
        if rules.deduplicate:
            key = rec.dedup_key()
            if key in seen:
                log.append(Rejection(_record_label(rec, i), "duplicate", rec.canonical_reaction()))
                continue
            seen.add(key)
        kept.append(rec)
    return kept, log


def read_reactions(lines: Iterable[str], format: str = "separated") -> tuple[list[ReactionRecord], list[Rejection]]:
    """Parse many lines; unparseable ones become ``parse_error`` rejections."""
    records, log = [], []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            records.append(parse_reaction(line, format))
        except ReactionParseError as exc:
            log.append(Rejection(f"line{lineno}", "parse_error", str(exc)))
    return records, log


def keep_largest_fragments(record: ReactionRecord, k: int, include_reagents: bool = True) -> ReactionRecord:
    """Reduce the target side to its ``k`` largest fragments, keeping their order."""
    if k < 1:
        raise ValueError("k must be positive")
    _, target = record.sides(include_reagents)
    if not target:
        raise ValueError("record has no target fragments")
    kept = set(largest_indices([canonicalize(m) for m in target], [m.heavy_atom_count for m in target], k))
    reduced = tuple(m for i, m in enumerate(target) if i in kept)
    if record.direction == RETRO:
        return replace(record, reactants=reduced, reagents=())
    return replace(record, products=reduced)


def largest_indices(texts: Sequence[str], heavy: Sequence[int], k: int) -> list[int]:
    """Indices of the ``k`` largest fragments under the largest-fragment order."""
    order = sorted(range(len(texts)), key=lambda i: fragment_size_key(heavy[i], texts[i]))
    return sorted(order[:k])


# --- pair files --------------------------------------------------------------


def format_pair_line(source: str, target: str) -> str:
    for text in (source, target):
        if "," in text or "\n" in text or "\r" in text:
            raise ValueError(f"pair text may not contain commas or newlines: {text!r}")
    return f"{source},{target}\n"


def parse_pair_line(line: str, lineno: int) -> tuple[str, str]:
    body = line.rstrip("\n")
    if body.count(",") != 1:
        raise DatasetFormatError("expected exactly one comma", lineno)
    source, target = body.split(",")
    return source, target


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary sibling and rename, so readers never see a partial file."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


@dataclass(frozen=True)
class AugmentedPair:
    source: str
    target: str
    variant_index: int = 0
    reaction_id: str = ""
    protocol: str = ""
    inverted: bool = field(default=False)


def write_dataset(pairs: Iterable, path: str | os.PathLike) -> None:
    """One ``source,target`` line per pair, UTF-8, LF-terminated."""
    lines = []
    for p in pairs:
        source, target = (p.source, p.target) if isinstance(p, AugmentedPair) else p
        lines.append(format_pair_line(source, target))
    atomic_write_text(path, "".join(lines))


def read_dataset(path: str | os.PathLike) -> list[tuple[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [parse_pair_line(line, i) for i, line in enumerate(fh, start=1)]
