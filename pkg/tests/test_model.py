import csv
import math
import random

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import enumerate_sequences, finite_difference_errors
from rxnaug.model import (
    Checkpoint,
    CheckpointError,
    DecodeConfig,
    ModelConfig,
    Seq2SeqTransformer,
    TrainConfig,
    UnknownCharacterError,
    Vocabulary,
    average_checkpoints,
    beam_decode,
    beam_decode_batch,
    beam_search,
    build_vocab,
    char_batches,
    greedy_decode,
    greedy_decode_batch,
    greedy_search,
    load_checkpoint,
    save_checkpoint,
    tempered_log_probs,
    train,
)
from rxnaug.model.checkpoint import META_KEY
from rxnaug.model.train import EncodedPairs, sequence_loss, warmup_inverse_sqrt
from rxnaug.model.transformer import MultiHeadAttention

PAIRS = [("CC(=O)Cl.OCC", "CCOC(C)=O"), ("c1ccccc1N", "Nc1ccccc1"), ("CCN.O=CC", "CCNCC")]


def tiny_model(vocab, seed=0, **kw):
    torch.manual_seed(seed)
    cfg = dict(layers=2, heads=2, width=16, ff_width=32, dropout=0.0, max_sequence_length=48)
    cfg.update(kw)
    return Seq2SeqTransformer(ModelConfig(**cfg), len(vocab))


# --- vocabulary ---------------------------------------------------------------


def test_vocab_from_single_string():
    v = build_vocab({"CCO"})
    assert v.chars == ("C", "O")
    assert v.size == 5 and len(v) == 5
    assert v.max_beam == 2


def test_vocab_is_deterministic_and_round_trips():
    a, b = build_vocab(PAIRS), build_vocab(list(reversed(PAIRS)))
    assert a == b and a.tokens == b.tokens
    assert Vocabulary.from_dict(a.to_dict()) == a
    assert set("".join(s + t for s, t in PAIRS)) == set(a.chars)
    assert a.max_beam == len(set("".join(t for _, t in PAIRS)))


def test_vocab_errors():
    with pytest.raises(ValueError):
        build_vocab([])
    v = build_vocab(PAIRS)
    with pytest.raises(UnknownCharacterError, match="'B' in pair 7"):
        v.encode("CBr", pair_id=7)


def test_vocab_encode_decode():
    v = build_vocab(PAIRS)
    ids = v.encode("CCO", add_bos=True, add_eos=True)
    assert ids[0] == 1 and ids[-1] == 2
    assert v.decode(ids) == "CCO"
    assert v.decode(v.encode("CC") + [2] + v.encode("N")) == "CC"


# --- transformer --------------------------------------------------------------


def test_model_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(width=30, heads=4)
    with pytest.raises(ValueError):
        ModelConfig(dropout=1.0)
    ref = ModelConfig.reference()
    assert (ref.layers, ref.heads) == (6, 8)
    assert ModelConfig.from_dict(ref.to_dict()) == ref


def _batch(vocab, pairs):
    return EncodedPairs(vocab, pairs).batch(list(range(len(pairs))))


def test_log_probability_rows_normalize():
    v = build_vocab(PAIRS)
    model = tiny_model(v, dropout=0.1).eval()
    src, tgt_in, _ = _batch(v, PAIRS)
    with torch.no_grad():
        logp = model(src, tgt_in)
    assert logp.shape == (*tgt_in.shape, len(v))
    assert torch.allclose(logp.exp().sum(-1), torch.ones(tgt_in.shape), atol=1e-6)


def test_attention_rows_normalize_with_masks():
    torch.manual_seed(3)
    attn = MultiHeadAttention(16, 4, 0.0)
    x = torch.randn(3, 7, 16)
    pad = torch.zeros(3, 7, dtype=torch.bool)
    pad[0, 5:] = True
    pad[2, 1:] = True
    for causal in (False, True):
        _, w = attn(x, x, x, pad, causal=causal)
        assert torch.allclose(w.sum(-1), torch.ones(3, 4, 7), atol=1e-6)
        assert float(w[0, :, :, 5:].detach().abs().max()) == 0.0
        if causal:
            assert float(w[1].detach().triu(1).abs().max()) == 0.0


def test_masked_positions_do_not_leak():
    v = build_vocab(PAIRS)
    model = tiny_model(v).eval()
    src, tgt_in, _ = _batch(v, PAIRS)
    src_pad, tgt_pad = src.eq(0), tgt_in.eq(0)
    assert src_pad.any() and tgt_pad.any()
    gen = torch.Generator().manual_seed(0)
    noisy_src = torch.where(src_pad, torch.randint(3, len(v), src.shape, generator=gen), src)
    noisy_tgt = torch.where(tgt_pad, torch.randint(3, len(v), tgt_in.shape, generator=gen), tgt_in)
    with torch.no_grad():
        base = model(src, tgt_in, src_pad, tgt_pad)
        other = model(noisy_src, noisy_tgt, src_pad, tgt_pad)
        longer = model(torch.nn.functional.pad(src, (0, 5)), tgt_in)
    keep = ~tgt_pad
    assert torch.allclose(base[keep], other[keep], atol=1e-6)
    assert torch.allclose(base[keep], longer[keep], atol=1e-6)


def test_forward_rejects_bad_tokens():
    v = build_vocab(PAIRS)
    model = tiny_model(v)
    src, tgt_in, _ = _batch(v, PAIRS)
    with pytest.raises(IndexError):
        model(src, tgt_in.clone().fill_(len(v)))
    with pytest.raises(ValueError):
        model(torch.ones(1, 49, dtype=torch.long), tgt_in[:1])


def test_gradients_match_finite_differences_sampled():
    v = build_vocab(PAIRS)
    model = tiny_model(v).double()
    src, tgt_in, tgt_out = _batch(v, PAIRS[:2])
    errors = finite_difference_errors(model, lambda: sequence_loss(model, src, tgt_in, tgt_out), coords=6)
    assert len(errors) == len(list(model.parameters()))
    for name, (scale, err) in errors.items():
        if scale < 1e-12:  # key biases: softmax is shift invariant, so the gradient is exactly zero
            assert err < 1e-7, name
        else:
            assert err / scale < 1e-4, name


# --- hand-built models for decoding -----------------------------------------

EOS, A, B, BOS = 0, 1, 2, 3

# next-token probabilities given the previous token; chosen so beam search is exact for beam <= 3
BIGRAM = {
    BOS: {EOS: 0.1, A: 0.6, B: 0.3},
    A: {EOS: 0.5, A: 0.2, B: 0.3},
    B: {EOS: 0.7, A: 0.2, B: 0.1},
}


def table_step(table):
    def step(prefix, rows):
        out = torch.full((prefix.shape[0], 4), float("-inf"), dtype=torch.float64)
        for r, last in enumerate(prefix[:, -1].tolist()):
            for tok, p in table[last].items():
                out[r, tok] = math.log(p)
        return out

    return step


def bigram_prob(table):
    return lambda prefix, tok: table[prefix[-1] if prefix else BOS][tok]


@pytest.mark.parametrize("beam", [1, 2, 3])
def test_beam_matches_exhaustive_enumeration(beam):
    exact = enumerate_sequences(bigram_prob(BIGRAM), (EOS, A, B), EOS, max_len=10)
    best = sorted(exact.items(), key=lambda kv: -kv[1])[:beam]
    [hyps] = beam_search(table_step(BIGRAM), 1, beam, bos=BOS, eos=EOS, max_len=10, banned=(BOS,))
    assert [h.tokens for h in hyps] == [seq for seq, _ in best]
    for h, (_, p) in zip(hyps, best):
        assert h.finished
        assert h.score == pytest.approx(math.log(p), abs=1e-12)


def test_greedy_two_token_model_follows_argmax_path():
    # continue probability depends on the position; greedy continues while it exceeds 1/2
    cont = [0.9, 0.8, 0.55, 0.3, 0.95]

    def step(prefix, rows):
        p = torch.tensor([cont[min(prefix.shape[1] - 1, len(cont) - 1)]] * prefix.shape[0], dtype=torch.float64)
        return torch.stack([torch.log1p(-p), torch.log(p)], dim=1)

    prob = lambda prefix, tok: cont[len(prefix)] if tok == 1 else 1 - cont[len(prefix)]
    path, score = (), 0.0
    while True:
        tok = max((0, 1), key=lambda t: prob(path, t))
        score += math.log(prob(path, tok))
        if tok == 0:
            break
        path += (tok,)
    [h] = greedy_search(step, 1, bos=1, eos=0, max_len=10)
    assert h.tokens == path == (1, 1, 1)
    assert h.score == pytest.approx(score, abs=1e-12)
    # the greedy path is not the most probable sequence here
    exact = enumerate_sequences(prob, (0, 1), 0, max_len=4)
    assert max(exact, key=exact.get) != path


def random_step(seed, vocab=5, context=True):
    """Deterministic pseudo-model: logits hashed from the prefix (or only the source row)."""

    def step(prefix, rows):
        out = []
        for p, r in zip(prefix.tolist(), rows.tolist()):
            key = (seed, r, tuple(p) if context else len(p) % 3)
            g = torch.Generator().manual_seed(hash(key) % (2**31))
            out.append(torch.randn(vocab, generator=g, dtype=torch.float64) * 2)
        return torch.stack(out)

    return step


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.sampled_from([0.7, 1.0, 1.5]))
def test_beam_result_properties(seed, beam, temperature):
    step = random_step(seed)
    results = beam_search(step, 2, beam, bos=1, eos=0, max_len=6, temperature=temperature, banned=(1,))
    for src, hyps in enumerate(results):
        assert 1 <= len(hyps) <= beam
        assert len({h.tokens for h in hyps}) == len(hyps)
        assert all(a.score >= b.score for a, b in zip(hyps, hyps[1:]))
        for h in hyps:
            # recompute the score token by token
            seq = [1, *h.tokens] + ([0] if h.finished else [])
            total = 0.0
            for t in range(1, len(seq)):
                logp = tempered_log_probs(step(torch.tensor([seq[:t]]), torch.tensor([src])), temperature, (1,))
                total += float(logp[0, seq[t]])
            assert h.score == pytest.approx(total, abs=1e-9)
    greedy = greedy_search(step, 2, bos=1, eos=0, max_len=6, temperature=temperature, banned=(1,))
    one = beam_search(step, 2, 1, bos=1, eos=0, max_len=6, temperature=temperature, banned=(1,))
    assert [g.tokens for g in greedy] == [r[0].tokens for r in one]
    assert [g.score for g in greedy] == pytest.approx([r[0].score for r in one], abs=1e-12)


def test_beam_batches_match_single_sources():
    step = random_step(11)
    together = beam_search(step, 3, 3, bos=1, eos=0, max_len=7, banned=(1,))
    for s in range(3):
        # remap the single source to row s of the same pseudo-model
        alone = beam_search(lambda p, r: step(p, r + s), 1, 3, bos=1, eos=0, max_len=7, banned=(1,))[0]
        assert together[s] == alone


def test_unfinished_hypotheses_at_length_limit():
    never_end = {BOS: {EOS: 0.01, A: 0.99}, A: {EOS: 0.01, A: 0.99}}
    [hyps] = beam_search(table_step(never_end), 1, 2, bos=BOS, eos=EOS, max_len=3, banned=(BOS,))
    assert hyps[0].tokens == (A, A, A) and not hyps[0].finished
    [g] = greedy_search(table_step(never_end), 1, bos=BOS, eos=EOS, max_len=3, banned=(BOS,))
    assert g.tokens == (A, A, A) and not g.finished


# --- temperature --------------------------------------------------------------


def test_temperature_one_is_plain_log_softmax():
    logits = torch.randn(4, 9, generator=torch.Generator().manual_seed(0))
    assert torch.equal(tempered_log_probs(logits, 1.0), torch.log_softmax(logits, -1))


def test_high_temperature_flattens():
    logits = torch.tensor([[8.0, -3.0, 0.5, 2.0, -7.5]])
    p = tempered_log_probs(logits, 1e6).exp()
    assert float(p.max() - p.min()) < 1e-3
    assert float(p.sum()) == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-200, 200), min_size=2, max_size=12, unique=True).map(lambda xs: [x / 10 for x in xs]),
       st.floats(0.05, 50))
def test_temperature_keeps_argmax_and_normalization(values, t):
    logits = torch.tensor([values], dtype=torch.float64)
    logp = tempered_log_probs(logits, t)
    assert int(logp.argmax()) == int(logits.argmax())
    assert float(logp.exp().sum()) == pytest.approx(1.0, abs=1e-6)


def test_decode_config_validation():
    for bad in (dict(beam=0), dict(temperature=0.0), dict(temperature=-1.0), dict(max_output_length=0)):
        with pytest.raises(ValueError):
            DecodeConfig(**bad)


# --- decoding with the transformer ---------------------------------------------


def test_transformer_greedy_equals_beam_one_and_is_deterministic():
    v = build_vocab(PAIRS)
    model = tiny_model(v, seed=4)
    cfg = DecodeConfig(beam=1, max_output_length=12)
    for src, _ in PAIRS:
        g = greedy_decode(model, v, src, cfg)
        assert greedy_decode(model, v, src, cfg) == g
        [b] = beam_decode(model, v, src, cfg)
        assert b[0] == g[0] and b[1] == pytest.approx(g[1], abs=1e-5)


def test_transformer_batched_decoding_matches_single():
    v = build_vocab(PAIRS)
    model = tiny_model(v, seed=5)
    cfg = DecodeConfig(beam=3, max_output_length=10)
    sources = [s for s, _ in PAIRS]
    batched = beam_decode_batch(model, v, sources, cfg, batch_size=2)
    for src, res in zip(sources, batched):
        single = beam_decode(model, v, src, cfg)
        assert [t for t, _ in single] == [t for t, _ in res]
        assert [s for _, s in single] == pytest.approx([s for _, s in res], abs=1e-5)
    greedy = greedy_decode_batch(model, v, sources, DecodeConfig(max_output_length=10))
    assert [t for t, _ in greedy] == [greedy_decode(model, v, s, DecodeConfig(max_output_length=10))[0] for s in sources]


def test_beam_wider_than_target_vocabulary_rejected():
    chars = "".join(chr(c) for c in range(ord("A"), ord("A") + 44))
    v = Vocabulary(chars)
    assert v.max_beam == 44
    model = Seq2SeqTransformer(ModelConfig(layers=1, heads=1, width=8, ff_width=8), len(v))
    beam_decode(model, v, "AB", DecodeConfig(beam=44, max_output_length=2))
    with pytest.raises(ValueError, match="45"):
        beam_decode(model, v, "AB", DecodeConfig(beam=45))


# --- checkpoints -------------------------------------------------------------


def test_checkpoint_round_trip(tmp_path):
    v = build_vocab(PAIRS)
    model = tiny_model(v)
    ckpt = Checkpoint.from_model(model, epoch=7, train_exact_match=0.625, vocab=v)
    path = tmp_path / "run" / "e7.safetensors"
    save_checkpoint(ckpt, path)
    back = load_checkpoint(path)
    assert (back.epoch, back.train_exact_match, back.config, back.vocab) == (7, 0.625, model.config, v)
    assert back.params.keys() == ckpt.params.keys()
    assert all(torch.equal(back.params[k], ckpt.params[k]) for k in ckpt.params)
    rebuilt = back.build_model()
    src, tgt_in, _ = _batch(v, PAIRS)
    with torch.no_grad():
        assert torch.equal(rebuilt(src, tgt_in), model.eval()(src, tgt_in))
    assert list(tmp_path.joinpath("run").iterdir()) == [path]


def test_checkpoint_load_errors(tmp_path):
    bad = tmp_path / "bad.safetensors"
    bad.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)
    from safetensors.torch import save_file

    other = tmp_path / "other.safetensors"
    save_file({"w": torch.zeros(2)}, str(other), metadata={META_KEY: '{"format_version": "99"}'})
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(other)


def _ckpt(params, epoch=1):
    return Checkpoint(params, epoch, 0.5)


def test_average_identical_checkpoints_is_identity():
    w = {"a": torch.randn(3, 4, generator=torch.Generator().manual_seed(1)), "b": torch.arange(3.0)}
    avg = average_checkpoints([_ckpt(w, e) for e in range(5)])
    assert all(torch.equal(avg.params[k], w[k]) for k in w)
    assert avg.epoch == 4 and math.isnan(avg.train_exact_match)


def test_average_cancels_opposite_weights():
    w = torch.randn(5, 2, generator=torch.Generator().manual_seed(2))
    members = [{"w": w}, {"w": -w}] + [{"w": torch.zeros(5, 2)}] * 3
    avg = average_checkpoints([_ckpt(m) for m in members])
    assert torch.equal(avg.params["w"], torch.zeros(5, 2))
    members = [{"w": w}, {"w": 3 * w}] + [{"w": torch.zeros(5, 2)}] * 3
    assert torch.allclose(average_checkpoints([_ckpt(m) for m in members]).params["w"], 0.8 * w, atol=1e-7)


def test_average_rejects_mismatches():
    with pytest.raises(CheckpointError, match="shape"):
        average_checkpoints([_ckpt({"w": torch.zeros(2)}), _ckpt({"w": torch.zeros(3)})])
    with pytest.raises(CheckpointError, match="names"):
        average_checkpoints([_ckpt({"w": torch.zeros(2)}), _ckpt({"v": torch.zeros(2)})])
    with pytest.raises(CheckpointError):
        average_checkpoints([])


# --- training ----------------------------------------------------------------


def test_char_batches_fill_greedily():
    assert char_batches([5, 5, 5, 12, 1], 10) == [[0, 1], [2], [3], [4]]
    assert char_batches([3, 3, 3], 10, order=[2, 0, 1]) == [[2, 0, 1]]


def test_char_batches_at_3000_chars_hold_12_to_16_reactions():
    rng = random.Random(0)
    lengths = [rng.randint(180, 240) for _ in range(600)]
    sizes = [len(b) for b in char_batches(lengths, 3000)]
    assert all(12 <= n <= 16 for n in sizes[:-1])
    assert sum(sizes) == 600


def test_warmup_schedule():
    assert warmup_inverse_sqrt(50, 100) == 0.5
    assert warmup_inverse_sqrt(100, 100) == 1.0
    assert warmup_inverse_sqrt(400, 100) == 0.5


def test_one_step_reduces_loss_on_the_pair():
    v = build_vocab(PAIRS)
    model = tiny_model(v)
    src, tgt_in, tgt_out = _batch(v, PAIRS[:1])
    before_params = [p.detach().clone() for p in model.parameters()]
    with torch.no_grad():
        before = float(sequence_loss(model, src, tgt_in, tgt_out))
    train(model, v, PAIRS[:1], TrainConfig(epochs=1, warmup_steps=1, learning_rate=1e-2))
    with torch.no_grad():
        after = float(sequence_loss(model, src, tgt_in, tgt_out))
    assert after < before
    assert any(not torch.equal(a, b) for a, b in zip(before_params, model.parameters()))


def test_training_reports_unknown_characters():
    v = build_vocab(PAIRS)
    model = tiny_model(v)
    with pytest.raises(UnknownCharacterError) as err:
        train(model, v, PAIRS + [("CCBr", "CC")], TrainConfig(epochs=1))
    assert err.value.char == "B" and err.value.pair_id == 3


def test_training_rejects_pairs_longer_than_the_model():
    v = build_vocab(PAIRS)
    with pytest.raises(ValueError, match="positions"):
        train(tiny_model(v, max_sequence_length=8), v, PAIRS, TrainConfig(epochs=1))


def test_training_log_and_best_checkpoints(tmp_path):
    v = build_vocab(PAIRS)
    model = tiny_model(v, dropout=0.1)
    log = tmp_path / "log.csv"
    result = train(model, v, PAIRS * 4, TrainConfig(epochs=8, batch_chars=120, warmup_steps=4, learning_rate=3e-3,
                                                    keep_best=3), log_path=log)
    rows = list(csv.DictReader(log.open()))
    assert list(rows[0]) == ["epoch", "loss", "char_acc", "exact_acc"]
    assert [int(r["epoch"]) for r in rows] == list(range(1, 9))
    assert len(result.best) == 3
    keys = [(c.train_exact_match, c.epoch) for c in result.best]
    assert keys == sorted(keys, reverse=True)
    assert {c.epoch for c in result.best} <= set(range(1, 9))
    by_epoch = {h.epoch: h.exact_acc for h in result.history}
    assert all(by_epoch[c.epoch] == c.train_exact_match for c in result.best)
    assert result.history[-1].loss < result.history[0].loss


def test_training_is_bitwise_reproducible():
    v = build_vocab(PAIRS)
    cfg = TrainConfig(epochs=3, batch_chars=60, warmup_steps=2, seed=9)
    runs = []
    for _ in range(2):
        model = tiny_model(v, seed=1, dropout=0.1)
        result = train(model, v, PAIRS * 3, cfg)
        runs.append((model.state_dict(), result.history))
    (sa, ha), (sb, hb) = runs
    assert ha == hb
    assert all(torch.equal(sa[k], sb[k]) for k in sa)
