"""``rxnaug`` command line: ingest, augment, train, predict, score, report, replay.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure during training.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

import torch

from .. import __version__
from ..augment import augment, augment_test_sources
from ..model import (CheckpointError, NonFiniteLossError, Seq2SeqTransformer, UnknownCharacterError,
                     average_checkpoints, build_vocab, evaluate, load_checkpoint, save_checkpoint, train)
from ..model.decode import check_beam
from ..reactions import (FORWARD, DatasetFormatError, ReactionParseError, ReactionRecord, Rejection,
                         atomic_write_text, filter_dataset, parse_reaction, read_dataset, write_dataset)
from ..scoring import (ConfidenceBin, PredictionFormatError, beam_position_report, confidence_bins, read_predictions,
                       read_report, score_reactions, subset_report, write_beam_position_curve,
                       write_confidence_curve, write_predictions, write_report)
from . import config as C
from .manifest import ManifestError, build_manifest, file_digest, read_manifest, write_manifest

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("rxnaug")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# --- shared helpers --------------------------------------------------------------


def load_records(path: str, fmt: str) -> list[ReactionRecord]:
    """Parse every reaction line; records without an id get ``line<N>``. Any bad line is a data error."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                rec = parse_reaction(line, fmt)
            except ReactionParseError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if rec.id is None:
                rec = replace(rec, id=f"line{lineno}")
            records.append(rec)
    return records


def _directed(records: list[ReactionRecord], direction: str) -> list[ReactionRecord]:
    if direction == "forward":
        return [replace(r, direction=FORWARD) for r in records]
    return records


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    lines = [",".join(header)] + [",".join(str(v) for v in row) for row in rows]
    atomic_write_text(path, "\n".join(lines) + "\n")


# --- subcommands -------------------------------------------------------------------
# each returns (inputs, outputs, summary); paths are name -> path


def run_ingest(a: dict, cfg: dict):
    src = a["input"]
    rejections: list[Rejection] = []
    records = []
    with open(src, encoding="utf-8") as fh:
        lines = fh.readlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            rec = parse_reaction(line, cfg["format"])
        except ReactionParseError as exc:
            rejections.append(Rejection(f"line{lineno}", "parse_error", str(exc)))
            continue
        records.append(rec if rec.id is not None else replace(rec, id=f"line{lineno}"))
    kept, dropped = filter_dataset(records, C.filter_rules(cfg))
    rejections += dropped
    _write_csv(Path(a["rejections"]), ("record_id", "rule", "detail"),
               [(r.record_id, r.rule, json.dumps(r.detail)) for r in rejections])
    if not kept:
        raise DataError(f"no reactions survived filtering ({len(rejections)} rejected; see {a['rejections']})")
    text = "".join(f"{r.id},{r.canonical_reaction()}" + (f",{r.class_label}" if r.class_label else "") + "\n"
                   for r in kept)
    atomic_write_text(a["output"], text)
    print(f"kept {len(kept)} reactions, rejected {len(rejections)}")
    return {"input": src}, {"output": a["output"], "rejections": a["rejections"]}, \
        {"kept": len(kept), "rejected": len(rejections)}


def run_augment(a: dict, cfg: dict):
    spec = C.augmentation_spec(cfg)
    records = _directed(load_records(a["input"], cfg["format"]), cfg["direction"])
    if not records:
        raise DataError(f"{a['input']}: no reactions")
    pairs = augment(records, spec)
    write_dataset(pairs, a["output"])
    print(f"wrote {len(pairs)} pairs ({spec.name}) for {len(records)} reactions")
    return {"input": a["input"]}, {"output": a["output"]}, \
        {"protocol": spec.name, "reactions": len(records), "pairs": len(pairs)}


def run_train(a: dict, cfg: dict):
    out = Path(a["out_dir"])
    try:
        pairs = read_dataset(a["pairs"])
    except DatasetFormatError as exc:
        raise DataError(f"{a['pairs']}: {exc}") from None
    try:
        vocab = build_vocab(pairs)
    except ValueError as exc:
        raise DataError(f"{a['pairs']}: {exc}") from None
    tcfg = C.train_config(cfg)
    torch.manual_seed(cfg["seed"])
    model = Seq2SeqTransformer(C.model_config(cfg), len(vocab))
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "train_log.csv"
    result = train(model, vocab, pairs, tcfg, log_path=log_path,
                   on_epoch=lambda s: log.info("epoch %d loss %.4f char %.3f exact %.3f",
                                               s.epoch, s.loss, s.char_acc, s.exact_acc))
    outputs = {"log": str(log_path)}
    for rank, ckpt in enumerate(result.best, start=1):
        ckpt.vocab = vocab
        path = out / f"checkpoint_rank{rank}.safetensors"
        save_checkpoint(ckpt, path)
        outputs[f"checkpoint_rank{rank}"] = str(path)
    final = average_checkpoints(result.best)
    final.vocab = vocab
    eval_pairs = pairs if tcfg.eval_subsample is None else pairs[: tcfg.eval_subsample]
    _, final.train_exact_match = evaluate(final.build_model(), vocab, eval_pairs)
    path = out / "averaged.safetensors"
    save_checkpoint(final, path)
    outputs["averaged"] = str(path)
    print(f"averaged {len(result.best)} checkpoints; train exact match {final.train_exact_match:.4f}")
    return {"pairs": a["pairs"]}, outputs, {
        "steps": result.steps,
        "best_epochs": [c.epoch for c in result.best],
        "best_train_exact_match": [c.train_exact_match for c in result.best],
        "averaged_train_exact_match": final.train_exact_match,
        "vocabulary_size": len(vocab),
    }


def run_predict(a: dict, cfg: dict):
    from ..experiment import predict_entries

    try:
        ckpt = load_checkpoint(a["checkpoint"])
        model = ckpt.build_model()
    except CheckpointError as exc:
        raise DataError(str(exc)) from None
    decode = C.decode_config(cfg)
    try:
        check_beam(ckpt.vocab, decode.beam)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    records = _directed(load_records(a["input"], cfg["format"]), cfg["direction"])
    sources = augment_test_sources(records, cfg["test_aug_n"], cfg["seed"], cfg["include_reagents"])
    entries = predict_entries(model, ckpt.vocab, sources, decode, batch_size=cfg["decode_batch"])
    write_predictions(entries, a["output"])
    covered = {(e.reaction_id, e.variant_index) for e in entries}
    print(f"wrote {len(entries)} predictions for {len(records)} reactions")
    return {"checkpoint": a["checkpoint"], "input": a["input"]}, {"output": a["output"]}, {
        "reactions": len(records),
        "sources": len(sources),
        "sources_without_predictions": len(sources) - len(covered),
        "predictions": len(entries),
        "beam": decode.beam,
        "temperature": decode.temperature,
        "test_aug_n": cfg["test_aug_n"],
    }


def run_score(a: dict, cfg: dict):
    out = Path(a["out_dir"])
    try:
        entries = read_predictions(a["predictions"])
    except PredictionFormatError as exc:
        raise DataError(f"{a['predictions']}: {exc}") from None
    records = _directed(load_records(a["targets"], cfg["format"]), cfg["direction"])
    targets = {r.id: r.canonical_pair(cfg["include_reagents"])[1] for r in records}
    unknown = sorted({e.reaction_id for e in entries} - set(targets))
    if unknown:
        shown = ", ".join(unknown[:5]) + (" ..." if len(unknown) > 5 else "")
        raise DataError(f"{len(unknown)} predicted reaction id(s) missing from the targets: {shown}")
    if not targets:
        raise DataError(f"{a['targets']}: no target reactions")
    try:
        outcomes = score_reactions(entries, targets, cfg["top"], cfg["maxfrag"], cfg["mode"],
                                   {r.id: r.class_label for r in records})
        rows = subset_report(outcomes, cfg["groups"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{name}.csv" for name in ("topn", "maxfrag", "subsets", "confidence", "beam_positions")}
    overall = [r for r in rows if r.group == "all"]
    write_report([r for r in overall if r.metric.startswith("top")], paths["topn"])
    write_report([r for r in overall if r.metric.startswith("maxfrag")], paths["maxfrag"])
    write_report(rows, paths["subsets"])
    scored = [o for o in outcomes if o.confidence is not None]
    first = f"top{cfg['top'][0]}"
    if scored:
        bins = confidence_bins([o.confidence for o in scored], [o.hits[first] for o in scored],
                               cfg["confidence_edges"], cfg["confidence_cumulative_below"])
    else:  # no valid predictions anywhere: keep the bin layout, leave accuracies empty
        bounds = [0.0, *sorted(cfg["confidence_edges"]), 1.0]
        bins = [ConfidenceBin(lo, hi, math.nan, 0.0, 0) for lo, hi in zip(bounds, bounds[1:])]
    write_confidence_curve(bins, paths["confidence"])
    write_beam_position_curve(beam_position_report(entries, targets), paths["beam_positions"])
    ranked_path = out / "ranked.tsv"
    lines = ["reaction_id\trank\tcanonical_text\trank_value\toccurrences"]
    for o in outcomes:
        for k, c in enumerate(o.ranked, start=1):
            lines.append(f"{o.reaction_id}\t{k}\t{c.canonical_text}\t{c.rank_value!r}\t{c.occurrence_count}")
    atomic_write_text(ranked_path, "\n".join(lines) + "\n")
    outputs = {k: str(v) for k, v in paths.items()}
    outputs["ranked"] = str(ranked_path)
    headline = {r.metric: r.value for r in overall}
    print(" ".join(f"{k}={v:.4f}" for k, v in headline.items()))
    return {"predictions": a["predictions"], "targets": a["targets"]}, outputs, {
        "reactions": len(targets),
        "without_valid_predictions": len(outcomes) - len(scored),
        **headline,
    }


REPORT_INPUTS = ("topn.csv", "maxfrag.csv", "confidence.csv", "beam_positions.csv")
SUMMARY_SETTINGS = (("augment", "protocol"), ("augment", "n"), ("train", "epochs"), ("predict", "test_aug_n"),
                    ("predict", "beam"), ("predict", "temperature"), ("score", "mode"))


def _sibling_manifest(path: str, command: str) -> Path:
    p = Path(path)
    return p.parent / "manifest.json" if command == "train" else Path(str(p) + ".manifest.json")


def upstream_manifests(score_manifest: dict) -> dict[str, dict]:
    """Follow recorded inputs back from a score run: predictions, checkpoint, pairs.

    Missing links are skipped; each manifest is located next to the file it describes.
    """
    chain = {"score": score_manifest}
    steps = (("score", "predictions", "predict"), ("predict", "checkpoint", "train"), ("train", "pairs", "augment"))
    for have, input_name, want in steps:
        rec = chain.get(have, {}).get("inputs", {}).get(input_name)
        if rec is None:
            break
        path = _sibling_manifest(rec["path"], want)
        if not path.is_file():
            break
        m = read_manifest(path)
        if m.get("command") != want:
            break
        chain[want] = m
    return chain


def run_report(a: dict, cfg: dict):
    out = Path(a["out_dir"])
    dirs = [Path(d) for d in a["score_dir"]]
    inputs: dict[str, str] = {}
    summary_rows = []
    runs = []
    for d in dirs:
        if not d.is_dir():
            raise DataError(f"{d}: not a directory")
        missing = [f for f in REPORT_INPUTS if not (d / f).is_file()]
        if missing:
            raise DataError(f"{d}: missing score outputs {', '.join(missing)}")
        run = d.name
        chain = {}
        if (d / "manifest.json").is_file():
            chain = upstream_manifests(read_manifest(d / "manifest.json"))
            inputs[f"{run}/manifest"] = str(d / "manifest.json")
        runs.append({"run": run, "manifests": chain})
        settings = [chain.get(stage, {}).get("config", {}).get(key, "") for stage, key in SUMMARY_SETTINGS]
        for name in REPORT_INPUTS:
            inputs[f"{run}/{name}"] = str(d / name)
        for f in ("topn.csv", "maxfrag.csv"):
            for row in read_report(d / f):
                summary_rows.append((run, *settings, row["metric"], row["group"], row["n"], row["value"]))
        curve = read_report(d / "confidence.csv")
        edges = [float(r["confidence_upper"]) for r in curve]
        if any(b <= x for x, b in zip(edges, edges[1:])):
            raise DataError(f"{d / 'confidence.csv'}: bin edges are not increasing")
    out.mkdir(parents=True, exist_ok=True)
    outputs = {}
    summary = out / "summary.csv"
    header = ("run", *(("aug_n" if key == "n" else key) for _, key in SUMMARY_SETTINGS),
              "metric", "group", "n", "value")
    _write_csv(summary, header, summary_rows)
    outputs["summary"] = str(summary)
    # plot-ready (x, y) pairs per run
    curves = (("confidence", "confidence.csv", "confidence_upper", "accuracy"),
              ("beam_accuracy", "beam_positions.csv", "beam_position", "accuracy"),
              ("beam_invalid", "beam_positions.csv", "beam_position", "invalid_rate"))
    for d in dirs:
        for name, source, x, y in curves:
            target = out / f"{name}_{d.name}.csv"
            _write_csv(target, (x, y), [(r[x], r[y]) for r in read_report(d / source)])
            outputs[f"{name}_{d.name}"] = str(target)
    runs_path = out / "runs.json"
    atomic_write_text(runs_path, json.dumps(runs, indent=2, sort_keys=True) + "\n")
    outputs["runs"] = str(runs_path)
    if a.get("plot"):
        outputs.update(_plot(dirs, out))
    print(f"summarized {len(dirs)} run(s) into {out}")
    return inputs, outputs, {"runs": [d.name for d in dirs]}


def _plot(dirs: list[Path], out: Path) -> dict[str, str]:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise UsageError("plotting needs matplotlib (install the 'plot' extra)") from None
    outputs = {}
    for name, x, y in (("confidence", "confidence_upper", "accuracy"), ("beam_positions", "beam_position", "accuracy")):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        for d in dirs:
            rows = [r for r in read_report(d / f"{name}.csv") if r[y] != ""]
            ax.plot([float(r[x]) for r in rows], [float(r[y]) for r in rows], marker="o", label=d.name)
        ax.set_xlabel(x.replace("_", " "))
        ax.set_ylabel(y)
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out / f"{name}.png"
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
        outputs[f"{name}_plot"] = str(path)
    return outputs


# command -> (runner, {arg: kind}); kinds: in_file, in_dirs, out_file, out_dir, flag
COMMANDS: dict[str, tuple[Callable, dict[str, str]]] = {
    "ingest": (run_ingest, {"input": "in_file", "output": "out_file", "rejections": "out_file"}),
    "augment": (run_augment, {"input": "in_file", "output": "out_file"}),
    "train": (run_train, {"pairs": "in_file", "out_dir": "out_dir"}),
    "predict": (run_predict, {"checkpoint": "in_file", "input": "in_file", "output": "out_file"}),
    "score": (run_score, {"predictions": "in_file", "targets": "in_file", "out_dir": "out_dir"}),
    "report": (run_report, {"score_dir": "in_dirs", "out_dir": "out_dir", "plot": "flag"}),
}

# dedicated flags and the configuration key each one sets
FLAG_KEYS = {
    "format": "format", "protocol": "protocol", "n": "n", "keep_largest": "keep_largest", "epochs": "epochs",
    "beam": "beam", "temperature": "temperature", "test_aug_n": "test_aug_n", "top": "top", "maxfrag": "maxfrag",
    "mode": "mode", "seed": "seed", "deterministic": "deterministic",
}


def _default_manifest(command: str, args: dict) -> Path:
    kinds = COMMANDS[command][1]
    for name, kind in kinds.items():
        if kind == "out_dir":
            return Path(args[name]) / "manifest.json"
    first = next(name for name, kind in kinds.items() if kind == "out_file")
    return Path(str(args[first]) + ".manifest.json")


def execute(command: str, args: dict, raw_config: dict[str, str], manifest_path: str | None = None) -> dict:
    """Run one subcommand with resolved configuration and write its manifest."""
    cfg = C.resolve(raw_config)
    runner, kinds = COMMANDS[command]
    if command == "ingest" and not args.get("rejections"):
        args = {**args, "rejections": str(args["output"]) + ".rejections.csv"}
    prior = torch.are_deterministic_algorithms_enabled()
    if cfg["deterministic"]:
        torch.use_deterministic_algorithms(True)
    start = time.perf_counter()
    try:
        inputs, outputs, summary = runner(args, cfg)
    finally:
        torch.use_deterministic_algorithms(prior)
    config_text = dict(l.split("=", 1) for l in C.render(cfg).splitlines())
    stored_args = {}
    for name, kind in kinds.items():
        value = args.get(name)
        if kind == "in_dirs":
            stored_args[name] = [str(Path(v).resolve()) for v in value]
        elif kind == "flag":
            stored_args[name] = bool(value)
        else:
            stored_args[name] = str(Path(value).resolve())
    manifest = build_manifest(command, config_text, stored_args, kinds, inputs, outputs,
                              time.perf_counter() - start, summary)
    path = Path(manifest_path) if manifest_path else _default_manifest(command, stored_args)
    write_manifest(manifest, path)
    return manifest


def replay(manifest_path: str, into: str | None) -> int:
    """Re-run a recorded stage with its configuration; outputs go to ``into`` and are compared by digest."""
    m = read_manifest(manifest_path)
    command = m["command"]
    if command not in COMMANDS:
        raise DataError(f"unknown command {command!r} in manifest")
    for name, rec in m["inputs"].items():
        if not Path(rec["path"]).is_file():
            raise DataError(f"recorded input {name} is missing: {rec['path']}")
        if file_digest(rec["path"])["sha256"] != rec["sha256"]:
            raise DataError(f"recorded input {name} changed since the run: {rec['path']}")
    target = Path(into) if into else Path(tempfile.mkdtemp(prefix="rxnaug-replay-"))
    target.mkdir(parents=True, exist_ok=True)
    args = {}
    for name, kind in m["arg_kinds"].items():
        value = m["args"][name]
        if kind == "out_file":
            args[name] = str(target / Path(value).name)
        elif kind == "out_dir":
            args[name] = str(target)
        else:
            args[name] = value
    new = execute(command, args, m["config"], str(target / Path(manifest_path).name))
    mismatched = [name for name, rec in m["outputs"].items()
                  if new["outputs"].get(name, {}).get("sha256") != rec["sha256"]]
    if mismatched:
        print(f"replay of {command} differs in: {', '.join(mismatched)}", file=sys.stderr)
        return EXIT_DATA
    print(f"replay of {command} reproduced {len(m['outputs'])} output file(s) in {target}")
    return EXIT_OK


# --- argument parsing -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key=value configuration file")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], help="override one configuration key")
    p.add_argument("--seed", help="master seed")
    p.add_argument("--deterministic", action="store_const", const="true", help="bit-reproducible kernels")
    p.add_argument("--no-deterministic", dest="deterministic", action="store_const", const="false")
    p.add_argument("--manifest", metavar="PATH", help="where to write the run manifest")
    p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rxnaug", description="Augmented SMILES pipeline for reaction prediction.")
    parser.add_argument("--version", action="version", version=f"rxnaug {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse and filter raw reactions")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--rejections", help="rejection log CSV (default: OUTPUT.rejections.csv)")
    p.add_argument("--format")
    _common(p)

    p = sub.add_parser("augment", help="write augmented source,target pairs")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--protocol")
    p.add_argument("--n")
    p.add_argument("--keep-largest", dest="keep_largest")
    p.add_argument("--format")
    _common(p)

    p = sub.add_parser("train", help="train, keep the best checkpoints and average them")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--epochs")
    _common(p)

    p = sub.add_parser("predict", help="beam predictions with test-time augmentation")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--beam")
    p.add_argument("--temperature")
    p.add_argument("--test-aug-n", dest="test_aug_n")
    p.add_argument("--format")
    _common(p)

    p = sub.add_parser("score", help="rank predictions and compute accuracies")
    p.add_argument("--predictions", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--top")
    p.add_argument("--maxfrag", action="store_const", const="true")
    p.add_argument("--no-maxfrag", dest="maxfrag", action="store_const", const="false")
    p.add_argument("--mode")
    p.add_argument("--format")
    _common(p)

    p = sub.add_parser("report", help="collect score outputs into plot-ready tables")
    p.add_argument("--score-dir", dest="score_dir", action="append", required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--plot", action="store_true", help="also render PNG figures (needs matplotlib)")
    _common(p)

    p = sub.add_parser("replay", help="re-run a stage from its manifest and compare outputs")
    p.add_argument("manifest_path", metavar="MANIFEST")
    p.add_argument("--into", help="directory for the replayed outputs (default: a new temporary directory)")
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("config", help="list configuration keys and defaults")
    p.add_argument("--write", metavar="PATH", help="write a default configuration file")
    return parser


def _raw_config(ns: argparse.Namespace) -> dict[str, str]:
    raw: dict[str, str] = {}
    if ns.config:
        try:
            text = Path(ns.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from None
        raw.update(C.parse_config_text(text, ns.config))
    for item in ns.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    for flag, key in FLAG_KEYS.items():
        value = getattr(ns, flag, None)
        if value is not None:
            raw[key] = value
    return raw


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                            format="%(message)s", stream=sys.stderr)
        if ns.command == "config":
            if ns.write:
                atomic_write_text(ns.write, C.render(C.resolve({})))
            else:
                print(C.describe())
            return EXIT_OK
        if ns.command == "replay":
            return replay(ns.manifest_path, ns.into)
        args = {name: getattr(ns, name) for name in COMMANDS[ns.command][1]}
        execute(ns.command, args, _raw_config(ns), ns.manifest)
        return EXIT_OK
    except (UsageError, C.ConfigError) as exc:
        print(f"rxnaug: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFiniteLossError as exc:
        print(f"rxnaug: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ManifestError, DatasetFormatError, PredictionFormatError, UnknownCharacterError, CheckpointError,
            FileNotFoundError, IsADirectoryError, UnicodeDecodeError) as exc:
        print(f"rxnaug: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # remaining ValueErrors come from invalid configuration values (e.g. epochs=0)
        print(f"rxnaug: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
