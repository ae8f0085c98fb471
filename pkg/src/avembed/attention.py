"""BiLSTM attention scorer over 3-second audio chunks and top-k selection.

The recurrence uses peephole connections: the input and forget gates see the
previous cell state, the output gate sees the current one. One forward and one
backward pass run over the whole chunk-feature sequence; per-chunk scores are
squashed to a distribution and pooled to macro-chunk scores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Chunk, FeatureSequence
from .errors import FormatError, ValidationError

_GATES = ("input", "forget", "cell", "output")
_PEEPHOLE_GATES = ("input", "forget", "output")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LstmParams:
    """Weights of one LSTM direction.

    w_x: gate -> (hidden, input_dim); w_h: gate -> (hidden, hidden);
    w_c: peephole gate -> (hidden, hidden); b: gate -> (hidden,).
    """

    w_x: dict[str, np.ndarray]
    w_h: dict[str, np.ndarray]
    w_c: dict[str, np.ndarray]
    b: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        for g in _GATES:
            if g not in self.w_x or g not in self.w_h or g not in self.b:
                raise ValueError(f"missing parameters for gate {g!r}")
        for g in _PEEPHOLE_GATES:
            if g not in self.w_c:
                raise ValueError(f"missing peephole weights for gate {g!r}")
        h, d = self.w_x["input"].shape
        for g in _GATES:
            if self.w_x[g].shape != (h, d) or self.w_h[g].shape != (h, h) or self.b[g].shape != (h,):
                raise ValueError(f"inconsistent shapes for gate {g!r}")
        for g in _PEEPHOLE_GATES:
            if self.w_c[g].shape != (h, h):
                raise ValueError(f"inconsistent peephole shape for gate {g!r}")
        for group in (self.w_x, self.w_h, self.w_c, self.b):
            for arr in group.values():
                if not np.all(np.isfinite(arr)):
                    raise ValidationError("non-finite LSTM parameter")

    @property
    def hidden_dim(self) -> int:
        return self.w_x["input"].shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_x["input"].shape[1]


@dataclass
class AttentionParams:
    """BiLSTM plus the attention score head u_t = w_out . tanh(W_f h_tf + W_b h_tb + beta)."""

    forward_lstm: LstmParams
    backward_lstm: LstmParams
    w_forward: np.ndarray
    w_backward: np.ndarray
    w_out: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        m = self.w_out.shape[0]
        if self.w_forward.shape != (m, self.forward_lstm.hidden_dim):
            raise ValueError("w_forward shape does not match attention/hidden dims")
        if self.w_backward.shape != (m, self.backward_lstm.hidden_dim):
            raise ValueError("w_backward shape does not match attention/hidden dims")
        if self.bias.shape != (m,):
            raise ValueError("bias shape does not match attention dim")


@dataclass
class ChunkSelection:
    """Result of macro-chunk scoring: which of the c macro-chunks represent the audio."""

    chunk_count: int
    selected_indices: list[int]
    scores: np.ndarray
    distribution: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= len(self.selected_indices) <= self.chunk_count:
            raise ValueError("selection size must be in [1, chunk_count]")
        if any(b <= a for a, b in zip(self.selected_indices, self.selected_indices[1:])):
            raise ValueError("selected_indices must be strictly increasing")
        theta = np.asarray(self.distribution, dtype=np.float64)
        if np.any(theta < 0) or abs(theta.sum() - 1.0) > 1e-9:
            raise ValidationError("distribution is not a probability vector")
        self.distribution = theta
        self.scores = np.asarray(self.scores, dtype=np.float64)


def lstm_step(
    x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray, p: LstmParams
) -> tuple[np.ndarray, np.ndarray]:
    """One recurrence step; returns (h_t, c_t)."""
    if x_t.shape != (p.input_dim,) or h_prev.shape != (p.hidden_dim,) or c_prev.shape != (p.hidden_dim,):
        raise ValueError(
            f"dimension mismatch: x {x_t.shape}, h {h_prev.shape}, c {c_prev.shape} "
            f"vs params ({p.hidden_dim}, {p.input_dim})"
        )
    i_t = _sigmoid(p.b["input"] + p.w_x["input"] @ x_t + p.w_h["input"] @ h_prev + p.w_c["input"] @ c_prev)
    f_t = _sigmoid(p.b["forget"] + p.w_x["forget"] @ x_t + p.w_h["forget"] @ h_prev + p.w_c["forget"] @ c_prev)
    c_t = f_t * c_prev + i_t * np.tanh(p.w_x["cell"] @ x_t + p.w_h["cell"] @ h_prev + p.b["cell"])
    o_t = _sigmoid(p.w_x["output"] @ x_t + p.w_h["output"] @ h_prev + p.w_c["output"] @ c_t + p.b["output"])
    h_t = o_t * np.tanh(c_t)
    return h_t, c_t


def bilstm_forward(
    chunk_features: list[np.ndarray] | np.ndarray, p: AttentionParams
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Run both directions from zero state; states returned in original time order."""
    feats = [np.asarray(x, dtype=np.float64) for x in chunk_features]
    if len(feats) == 0:
        raise ValidationError("empty chunk sequence")

    def _run(seq: list[np.ndarray], params: LstmParams) -> list[np.ndarray]:
        h = np.zeros(params.hidden_dim)
        c = np.zeros(params.hidden_dim)
        states = []
        for x in seq:
            h, c = lstm_step(x, h, c, params)
            states.append(h)
        return states

    fwd = _run(feats, p.forward_lstm)
    bwd = _run(feats[::-1], p.backward_lstm)[::-1]
    return list(zip(fwd, bwd))


def chunk_feature(chunk: Chunk) -> np.ndarray:
    """Global max-pooling of a chunk's frames; the BiLSTM input."""
    if chunk.frames.shape[0] == 0:
        raise ValidationError("empty chunk")
    return chunk.frames.max(axis=0).astype(np.float64)


def attention_scores(states: list[tuple[np.ndarray, np.ndarray]], p: AttentionParams) -> np.ndarray:
    if len(states) == 0:
        raise ValidationError("empty state sequence")
    scores = np.empty(len(states))
    for t, (h_f, h_b) in enumerate(states):
        if h_f.shape != (p.forward_lstm.hidden_dim,) or h_b.shape != (p.backward_lstm.hidden_dim,):
            raise ValueError("state dimensions do not match attention parameters")
        scores[t] = p.w_out @ np.tanh(p.w_forward @ h_f + p.w_backward @ h_b + p.bias)
    return scores


def attention_distribution(u: np.ndarray) -> np.ndarray:
    """Softmax with max-subtraction for stability."""
    u = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise ValidationError("non-finite attention scores")
    shifted = u - u.max()
    e = np.exp(shifted)
    return e / e.sum()


def select_top_k(theta: np.ndarray, c: int, k: int) -> ChunkSelection:
    """Pool base-chunk attention mass into c macro-chunks by max and pick the top k.

    Ties break toward the lower macro-chunk index; selected indices are
    reported in temporal order.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if c < 1 or theta.shape[0] % c != 0:
        raise ValueError(f"unsupported chunk count {c} for {theta.shape[0]} base chunks")
    if not 1 <= k <= c:
        raise ValueError(f"k must be in [1, {c}], got {k}")
    macro_scores = theta.reshape(c, -1).max(axis=1)
    order = np.argsort(-macro_scores, kind="stable")
    selected = sorted(int(i) for i in order[:k])
    return ChunkSelection(chunk_count=c, selected_indices=selected, scores=macro_scores, distribution=theta)


def query_representation(
    seq: FeatureSequence, selection: ChunkSelection | None = None, chunk_len_sec: int = 3
) -> np.ndarray:
    """Audio query vector: mean over all frames, or over the selected macro-chunks only."""
    if seq.modality != "audio":
        raise ValueError(f"query_representation expects an audio sequence, got {seq.modality!r}")
    if selection is None:
        return seq.frames.mean(axis=0, dtype=np.float64)
    if not selection.selected_indices:
        raise ValueError("empty selection")
    n_base = selection.distribution.shape[0]
    frames_per_macro = (n_base // selection.chunk_count) * chunk_len_sec
    if n_base * chunk_len_sec > seq.n_frames:
        raise ValueError(
            f"selection covers {n_base * chunk_len_sec} frames but sequence has {seq.n_frames}"
        )
    rows: list[np.ndarray] = []
    for i in selection.selected_indices:
        rows.append(seq.frames[i * frames_per_macro : (i + 1) * frames_per_macro])
    return np.concatenate(rows, axis=0).mean(axis=0, dtype=np.float64)


def _lstm_to_json(p: LstmParams) -> dict:
    out: dict[str, list] = {}
    for g in _GATES:
        out[f"w_x_{g}"] = p.w_x[g].tolist()
        out[f"w_h_{g}"] = p.w_h[g].tolist()
        out[f"b_{g}"] = p.b[g].tolist()
    for g in _PEEPHOLE_GATES:
        out[f"w_c_{g}"] = p.w_c[g].tolist()
    return out


def _lstm_from_json(obj: dict) -> LstmParams:
    try:
        w_x = {g: np.asarray(obj[f"w_x_{g}"], dtype=np.float64) for g in _GATES}
        w_h = {g: np.asarray(obj[f"w_h_{g}"], dtype=np.float64) for g in _GATES}
        b = {g: np.asarray(obj[f"b_{g}"], dtype=np.float64) for g in _GATES}
        w_c = {g: np.asarray(obj[f"w_c_{g}"], dtype=np.float64) for g in _PEEPHOLE_GATES}
    except KeyError as exc:
        raise FormatError(f"attention weights file is missing array {exc}") from exc
    try:
        return LstmParams(w_x=w_x, w_h=w_h, w_c=w_c, b=b)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def save_attention_params(p: AttentionParams, path: str | Path) -> None:
    obj = {
        "version": 1,
        "forward_lstm": _lstm_to_json(p.forward_lstm),
        "backward_lstm": _lstm_to_json(p.backward_lstm),
        "w_forward": p.w_forward.tolist(),
        "w_backward": p.w_backward.tolist(),
        "w_out": p.w_out.tolist(),
        "bias": p.bias.tolist(),
    }
    Path(path).write_text(json.dumps(obj), encoding="utf-8")


def load_attention_params(path: str | Path) -> AttentionParams:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON") from exc
    if obj.get("version") != 1:
        raise FormatError(f"{path}: unsupported attention weights version {obj.get('version')!r}")
    try:
        params = AttentionParams(
            forward_lstm=_lstm_from_json(obj["forward_lstm"]),
            backward_lstm=_lstm_from_json(obj["backward_lstm"]),
            w_forward=np.asarray(obj["w_forward"], dtype=np.float64),
            w_backward=np.asarray(obj["w_backward"], dtype=np.float64),
            w_out=np.asarray(obj["w_out"], dtype=np.float64),
            bias=np.asarray(obj["bias"], dtype=np.float64),
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing key {exc}") from exc
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return params


def random_lstm_params(input_dim: int, hidden_dim: int, rng: np.random.Generator, scale: float = 0.2) -> LstmParams:
    w_x = {g: scale * rng.normal(size=(hidden_dim, input_dim)) for g in _GATES}
    w_h = {g: scale * rng.normal(size=(hidden_dim, hidden_dim)) for g in _GATES}
    w_c = {g: scale * rng.normal(size=(hidden_dim, hidden_dim)) for g in _PEEPHOLE_GATES}
    b = {g: np.zeros(hidden_dim) for g in _GATES}
    return LstmParams(w_x=w_x, w_h=w_h, w_c=w_c, b=b)


def random_attention_params(
    input_dim: int, hidden_dim: int = 16, attention_dim: int = 16, seed: int = 0, scale: float = 0.2
) -> AttentionParams:
    """Seeded stand-in scorer for pipelines that have no trained weights file."""
    rng = np.random.default_rng(seed)
    return AttentionParams(
        forward_lstm=random_lstm_params(input_dim, hidden_dim, rng, scale),
        backward_lstm=random_lstm_params(input_dim, hidden_dim, rng, scale),
        w_forward=scale * rng.normal(size=(attention_dim, hidden_dim)),
        w_backward=scale * rng.normal(size=(attention_dim, hidden_dim)),
        w_out=scale * rng.normal(size=attention_dim),
        bias=np.zeros(attention_dim),
    )
