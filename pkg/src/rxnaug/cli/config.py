"""Flat ``key=value`` pipeline configuration.

Values come from the defaults below, then a ``--config`` file, then
``--set key=value`` overrides and dedicated flags. Unknown keys are errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from ..augment import AugmentationSpec
from ..model import DecodeConfig, ModelConfig, TrainConfig
from ..reactions import FORMATS, FilterRules
from ..scoring.ranking import MODES


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def inner(text: str):
        return None if text.strip().lower() in ("", "none") else parse(text)

    return inner


def _choice(*options: str) -> Callable[[str], str]:
    def inner(text: str) -> str:
        if text not in options:
            raise ValueError(f"{text!r} is not one of {', '.join(options)}")
        return text

    return inner


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _protocol(text: str) -> str:
    if text in ("x1", "xN", "xNR", "xNF", "xNS", "xNM"):
        return text
    AugmentationSpec.from_name(text)  # e.g. x5F; raises on nonsense
    return text


@dataclass(frozen=True)
class Key:
    default: Any
    parse: Callable[[str], Any]
    doc: str


_F, _M, _T, _D = FilterRules(), ModelConfig(), TrainConfig(), DecodeConfig()

KEYS: dict[str, Key] = {
    # data
    "format": Key("separated", _choice(*FORMATS), "input reaction format: separated, mixed or pair"),
    "min_reactant_atoms": Key(_F.min_reactant_atoms, int, "drop reactions with fewer reactant heavy atoms"),
    "min_product_chars": Key(_F.min_product_chars, int, "drop reactions whose largest canonical product is shorter"),
    "drop_empty_products": Key(_F.drop_empty_products, _bool, "drop reactions without products"),
    "drop_single_ion_products": Key(_F.drop_single_ion_products, _bool, "drop reactions whose products are lone ions"),
    "deduplicate": Key(_F.deduplicate, _bool, "keep only the first copy of a repeated reaction"),
    # augmentation
    "protocol": Key("xN", _protocol, "augmentation protocol: x1, xN, xNR, xNF, xNS, xNM or a full name like x5F"),
    "n": Key(1, int, "augmentations per reaction (ignored when protocol names its own count)"),
    "keep_largest": Key(None, _optional(int), "keep only the K largest target fragments"),
    "include_reagents": Key(True, _bool, "treat reagents as part of the precursor side"),
    "direction": Key("retro", _choice("retro", "forward"), "prediction direction of the generated pairs"),
    # model
    "layers": Key(_M.layers, int, "encoder and decoder layers"),
    "heads": Key(_M.heads, int, "attention heads"),
    "width": Key(_M.width, int, "model width"),
    "ff_width": Key(_M.ff_width, int, "feed-forward width"),
    "dropout": Key(_M.dropout, float, "dropout rate"),
    "max_sequence_length": Key(_M.max_sequence_length, int, "longest token sequence the model accepts"),
    # training
    "epochs": Key(_T.epochs, int, "training epochs"),
    "batch_chars": Key(_T.batch_chars, int, "character budget per batch (source plus target)"),
    "learning_rate": Key(_T.learning_rate, float, "peak learning rate, reached after warmup"),
    "warmup_steps": Key(_T.warmup_steps, int, "linear warmup steps before inverse square-root decay"),
    "max_grad_norm": Key(_T.max_grad_norm, _optional(float), "gradient clipping norm"),
    "keep_best": Key(_T.keep_best, int, "checkpoints kept and averaged"),
    "eval_subsample": Key(_T.eval_subsample, _optional(int), "training pairs decoded per accuracy estimate"),
    "eval_every": Key(_T.eval_every, int, "epochs between accuracy estimates"),
    # decoding
    "beam": Key(5, int, "beam width (1 is greedy)"),
    "temperature": Key(_D.temperature, float, "softmax temperature"),
    "max_output_length": Key(_D.max_output_length, int, "longest generated sequence"),
    "test_aug_n": Key(1, int, "input variants per test reaction (variant 0 canonical)"),
    "decode_batch": Key(32, int, "sources decoded together"),
    # scoring
    "top": Key((1, 2, 5, 10), _int_list, "Top-n values, comma separated"),
    "maxfrag": Key(True, _bool, "also report largest-fragment accuracy"),
    "mode": Key("dedup_first", _choice(*MODES), "repeated predictions within a beam: dedup_first or keep_all"),
    "groups": Key(("stereo", "class"), _str_list, "subset report groupings: stereo, class"),
    "confidence_edges": Key((0.2, 0.4, 0.6, 0.8), _float_list, "confidence bin edges"),
    "confidence_cumulative_below": Key(None, _optional(float), "average accuracy cumulatively for bins up to this"),
    # run
    "seed": Key(0, int, "master seed for augmentation, initialization and training"),
    "deterministic": Key(False, _bool, "deterministic kernels for bit-identical reruns"),
}


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, str]:
    """Raw ``key=value`` pairs; blank lines and ``#`` comments are skipped."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key] = value
    return out


def resolve(raw: dict[str, str]) -> dict[str, Any]:
    """Defaults overlaid with parsed ``raw`` values; unknown keys and bad values raise."""
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
    cfg = {k: spec.default for k, spec in KEYS.items()}
    for key, text in raw.items():
        try:
            cfg[key] = KEYS[key].parse(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return cfg


def format_value(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ",".join(map(str, v))
    return str(v)


def render(cfg: dict[str, Any]) -> str:
    """Config file text that resolves back to ``cfg``."""
    return "".join(f"{k}={format_value(cfg[k])}\n" for k in KEYS)


def describe() -> str:
    width = max(map(len, KEYS))
    return "\n".join(f"{k.ljust(width)}  {format_value(spec.default):<18} {spec.doc}" for k, spec in KEYS.items())


# --- builders ------------------------------------------------------------------


def filter_rules(cfg) -> FilterRules:
    return FilterRules(cfg["min_reactant_atoms"], cfg["min_product_chars"], cfg["drop_empty_products"],
                       cfg["deduplicate"], cfg["drop_single_ion_products"])


def augmentation_spec(cfg) -> AugmentationSpec:
    proto = cfg["protocol"]
    if proto == "x1":
        return AugmentationSpec("xN", 1, cfg["seed"], cfg["keep_largest"], cfg["include_reagents"])
    if proto.startswith("xN"):
        return AugmentationSpec(proto, cfg["n"], cfg["seed"], cfg["keep_largest"], cfg["include_reagents"])
    return AugmentationSpec.from_name(proto, cfg["seed"], keep_largest_k=cfg["keep_largest"],
                                      include_reagents=cfg["include_reagents"])


def model_config(cfg) -> ModelConfig:
    return ModelConfig(cfg["layers"], cfg["heads"], cfg["width"], cfg["ff_width"], cfg["dropout"],
                       cfg["max_sequence_length"])


def train_config(cfg) -> TrainConfig:
    return TrainConfig(epochs=cfg["epochs"], batch_chars=cfg["batch_chars"], learning_rate=cfg["learning_rate"],
                       warmup_steps=cfg["warmup_steps"], max_grad_norm=cfg["max_grad_norm"], seed=cfg["seed"],
                       keep_best=cfg["keep_best"], eval_subsample=cfg["eval_subsample"],
                       eval_every=cfg["eval_every"], deterministic=cfg["deterministic"])


def decode_config(cfg) -> DecodeConfig:
    return DecodeConfig(cfg["beam"], cfg["temperature"], cfg["max_output_length"])
