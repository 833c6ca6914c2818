"""Character-level transformer, training and decoding."""

from .checkpoint import Checkpoint, CheckpointError, average_checkpoints, load_checkpoint, save_checkpoint
from .decode import (DecodeConfig, Hypothesis, beam_decode, beam_decode_batch, beam_search, greedy_decode,
                     greedy_decode_batch, greedy_search, tempered_log_probs)
from .train import EpochStats, NonFiniteLossError, TrainConfig, TrainResult, char_batches, evaluate, train
from .transformer import ModelConfig, Seq2SeqTransformer
from .vocab import BOS_ID, EOS_ID, PAD_ID, UnknownCharacterError, Vocabulary, build_vocab
