"""Two-branch MLP embedding trained by maximizing total correlation.

The objective is the sum of the top-r singular values of the whitened
cross-covariance of the branch outputs, estimated per minibatch with ridge
regularization. Its closed-form gradient flows back through tanh hidden
layers and a logistic output layer; RMSProp performs the ascent. A linear
CCA head fitted on the final eval-mode outputs defines the shared space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import blockio
from .cca import LinearProjection, _whitening, fit_cca, project
from .clustering import expand_pairs
from .errors import DivergenceError, FormatError

DEFAULT_AUDIO_LAYERS = (128, 128, 64, 64)
DEFAULT_VISUAL_LAYERS = (512, 512, 256, 256)

_MODEL_MAGIC = b"AVDM"
_SIDES = {"audio": "x", "x": "x", "visual": "y", "y": "y"}


@dataclass
class BranchNetwork:
    """One MLP branch: tanh hidden layers, logistic output, inverted dropout."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout_rate: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("weights and biases must be non-empty and aligned")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape[1] != b.shape[0]:
                raise ValueError(f"layer {i}: bias dim {b.shape[0]} != output dim {w.shape[1]}")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i}: input dim {w.shape[0]} breaks the chain")

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]


@dataclass
class TrainConfig:
    batch_size: int = 512
    epochs: int = 50
    learning_rate: float = 0.001
    rho: float = 0.9
    epsilon: float = 1e-8
    dropout: float = 0.2
    r: int = 30
    reg: float = 1e-4
    seed: int = 0
    folds: int = 5

    def __post_init__(self) -> None:
        if self.batch_size < self.r + 1:
            raise ValueError(
                f"batch_size ({self.batch_size}) must be >= r + 1 ({self.r + 1}) "
                "for a well-posed batch covariance"
            )
        for name in ("batch_size", "epochs", "learning_rate", "epsilon", "r"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must be in (0, 1)")
        if self.reg < 0:
            raise ValueError("reg must be >= 0")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")


@dataclass
class DeepModel:
    audio_branch: BranchNetwork
    visual_branch: BranchNetwork
    cca_head: LinearProjection
    r: int
    reg: float
    objective_history: list[float] = field(default_factory=list)


def init_branch(layer_dims: list[int], dropout_rate: float, rng: np.random.Generator) -> BranchNetwork:
    """Glorot-uniform initialization."""
    weights, biases = [], []
    for d_in, d_out in zip(layer_dims, layer_dims[1:]):
        bound = np.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-bound, bound, size=(d_in, d_out)))
        biases.append(np.zeros(d_out))
    return BranchNetwork(weights=weights, biases=biases, dropout_rate=dropout_rate)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def branch_forward(
    net: BranchNetwork,
    batch: np.ndarray,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, list[dict]]:
    """Forward pass; returns (outputs, per-layer caches for backprop).

    Train mode applies inverted dropout to hidden activations, so eval mode
    needs no rescaling.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    a = np.asarray(batch, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != net.weights[0].shape[0]:
        raise ValueError(
            f"batch shape {a.shape} does not match branch input dim {net.weights[0].shape[0]}"
        )
    use_dropout = mode == "train" and net.dropout_rate > 0.0
    if use_dropout and rng is None:
        raise ValueError("train-mode dropout needs an rng")
    caches: list[dict] = []
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        if i == last:
            out = _sigmoid(z)
            caches.append({"input": a, "activated": out, "mask": None})
            a = out
        else:
            h = np.tanh(z)
            cache = {"input": a, "activated": h, "mask": None}
            if use_dropout:
                mask = (rng.random(h.shape) >= net.dropout_rate) / (1.0 - net.dropout_rate)
                cache["mask"] = mask
                h = h * mask
            caches.append(cache)
            a = h
    return a, caches


def branch_backward(
    net: BranchNetwork, caches: list[dict], d_out: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of each weight/bias given d(objective)/d(outputs)."""
    d_w = [np.empty(0)] * len(net.weights)
    d_b = [np.empty(0)] * len(net.biases)
    grad = d_out
    for i in range(len(net.weights) - 1, -1, -1):
        cache = caches[i]
        act = cache["activated"]
        if i == len(net.weights) - 1:
            dz = grad * act * (1.0 - act)  # logistic
        else:
            if cache["mask"] is not None:
                grad = grad * cache["mask"]
            dz = grad * (1.0 - act * act)  # tanh
        d_w[i] = cache["input"].T @ dz
        d_b[i] = dz.sum(axis=0)
        grad = dz @ net.weights[i].T
    return d_w, d_b


def _whitened_svd(fx: np.ndarray, fy: np.ndarray, reg: float | None):
    n = fx.shape[0]
    if fy.shape[0] != n:
        raise ValueError(f"views must pair rows: {n} vs {fy.shape[0]}")
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    _, _, xc, yc, isx, isy, sxy, _, _ = _whitening(
        np.asarray(fx, dtype=np.float64), np.asarray(fy, dtype=np.float64), reg
    )
    t = isx @ sxy @ isy
    u, s, vt = np.linalg.svd(t, full_matrices=False)
    return xc, yc, isx, isy, u, s, vt


def total_correlation(fx: np.ndarray, fy: np.ndarray, r: int, reg: float | None = None) -> float:
    """Sum of the top-r singular values of the whitened cross-covariance, each clipped to 1."""
    fx = np.asarray(fx, dtype=np.float64)
    fy = np.asarray(fy, dtype=np.float64)
    if not 1 <= r <= min(fx.shape[1], fy.shape[1]):
        raise ValueError(f"r must be in [1, {min(fx.shape[1], fy.shape[1])}], got {r}")
    _, _, _, _, _, s, _ = _whitened_svd(fx, fy, reg)
    return float(np.minimum(s[:r], 1.0).sum())


def corr_gradient(
    fx: np.ndarray, fy: np.ndarray, r: int, reg: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient of total_correlation with respect to each view's entries."""
    fx = np.asarray(fx, dtype=np.float64)
    fy = np.asarray(fy, dtype=np.float64)
    if not 1 <= r <= min(fx.shape[1], fy.shape[1]):
        raise ValueError(f"r must be in [1, {min(fx.shape[1], fy.shape[1])}], got {r}")
    n = fx.shape[0]
    xc, yc, isx, isy, u, s, vt = _whitened_svd(fx, fy, reg)
    # components at the clip boundary contribute no gradient
    active = s[:r] < 1.0
    u_r = u[:, :r][:, active]
    v_r = vt[:r, :].T[:, active]
    s_r = s[:r][active]
    delta12 = isx @ u_r @ v_r.T @ isy
    delta11 = -0.5 * (isx @ (u_r * s_r) @ u_r.T @ isx)
    delta22 = -0.5 * (isy @ (v_r * s_r) @ v_r.T @ isy)
    d_fx = (2.0 * xc @ delta11 + yc @ delta12.T) / (n - 1)
    d_fy = (2.0 * yc @ delta22 + xc @ delta12) / (n - 1)
    return d_fx, d_fy


class _RmsProp:
    def __init__(self, params: list[np.ndarray], lr: float, rho: float, eps: float):
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.cache = [np.zeros_like(p) for p in params]

    def ascend(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g, c in zip(params, grads, self.cache):
            c *= self.rho
            c += (1.0 - self.rho) * g * g
            p += self.lr * g / (np.sqrt(c) + self.eps)


def _train_on_pairs(
    x: np.ndarray,
    y: np.ndarray,
    a_idx: np.ndarray,
    v_idx: np.ndarray,
    cfg: TrainConfig,
    audio_layers: tuple[int, ...],
    visual_layers: tuple[int, ...],
) -> DeepModel:
    """Shared training loop; pairs are (a_idx[i], v_idx[i]) rows of x and y."""
    if cfg.r > min(audio_layers[-1], visual_layers[-1]):
        raise ValueError(
            f"r={cfg.r} exceeds branch output dims ({audio_layers[-1]}, {visual_layers[-1]})"
        )
    n = a_idx.shape[0]
    if n < cfg.batch_size:
        raise ValueError(f"need at least batch_size={cfg.batch_size} pairs, got {n}")

    rng = np.random.default_rng(cfg.seed)
    audio = init_branch([x.shape[1], *audio_layers], cfg.dropout, rng)
    visual = init_branch([y.shape[1], *visual_layers], cfg.dropout, rng)
    opt_a = _RmsProp(audio.weights + audio.biases, cfg.learning_rate, cfg.rho, cfg.epsilon)
    opt_v = _RmsProp(visual.weights + visual.biases, cfg.learning_rate, cfg.rho, cfg.epsilon)

    history: list[float] = []
    n_batches = n // cfg.batch_size  # trailing partial batch is dropped
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        batch_objs = []
        for b in range(n_batches):
            sel = perm[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            fa, cache_a = branch_forward(audio, x[a_idx[sel]], "train", rng)
            fv, cache_v = branch_forward(visual, y[v_idx[sel]], "train", rng)
            obj = total_correlation(fa, fv, cfg.r, cfg.reg)
            if not np.isfinite(obj):
                raise DivergenceError(
                    f"non-finite objective at epoch {epoch}, batch {b}", epoch=epoch, batch=b
                )
            d_fa, d_fv = corr_gradient(fa, fv, cfg.r, cfg.reg)
            dw_a, db_a = branch_backward(audio, cache_a, d_fa)
            dw_v, db_v = branch_backward(visual, cache_v, d_fv)
            opt_a.ascend(audio.weights + audio.biases, dw_a + db_a)
            opt_v.ascend(visual.weights + visual.biases, dw_v + db_v)
            batch_objs.append(obj)
        history.append(float(np.mean(batch_objs)))

    # head fitted once, on eval-mode outputs over the full training pairing
    out_a, _ = branch_forward(audio, x, "eval")
    out_v, _ = branch_forward(visual, y, "eval")
    head = fit_cca(out_a[a_idx], out_v[v_idx], cfg.r, cfg.reg)
    return DeepModel(
        audio_branch=audio,
        visual_branch=visual,
        cca_head=head,
        r=cfg.r,
        reg=cfg.reg,
        objective_history=history,
    )


def _check_views(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("views must be matrices with paired rows")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite training inputs")
    return x, y


def train_dcca(
    x: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    audio_layers: tuple[int, ...] = DEFAULT_AUDIO_LAYERS,
    visual_layers: tuple[int, ...] = DEFAULT_VISUAL_LAYERS,
) -> DeepModel:
    """Minibatch ascent on total correlation through both branches.

    Deterministic for a given cfg.seed: initialization, shuffling, and
    dropout all draw from one seeded stream. The CCA head is fitted once, on
    full-dataset eval-mode outputs after the last epoch.
    """
    x, y = _check_views(x, y)
    idx = np.arange(x.shape[0])
    return _train_on_pairs(x, y, idx, idx, cfg, audio_layers, visual_layers)


def train_sdcca(
    x: np.ndarray,
    y: np.ndarray,
    labels: np.ndarray,
    f: float,
    cfg: TrainConfig,
    target_count: int | None = None,
    audio_layers: tuple[int, ...] = DEFAULT_AUDIO_LAYERS,
    visual_layers: tuple[int, ...] = DEFAULT_VISUAL_LAYERS,
) -> DeepModel:
    """DCCA over cluster-expanded pairs; f = 0 reproduces the plain pairing."""
    x, y = _check_views(x, y)
    labels = np.asarray(labels)
    if labels.shape[0] != x.shape[0]:
        raise ValueError("labels must align with the paired rows")
    pairs = expand_pairs(labels, None, f=f, seed=cfg.seed, target_count=target_count)
    return _train_on_pairs(
        x, y, pairs.audio_indices, pairs.visual_indices, cfg, audio_layers, visual_layers
    )


def embed(model: DeepModel, features: np.ndarray, side: str) -> np.ndarray:
    """Eval-mode branch forward, then the CCA head projection for that side."""
    if side not in _SIDES:
        raise ValueError(f"side must be one of {sorted(_SIDES)}, got {side!r}")
    branch = model.audio_branch if _SIDES[side] == "x" else model.visual_branch
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    out, _ = branch_forward(branch, features, "eval")
    return project(model.cca_head, out, _SIDES[side])


def save_deep_model(model: DeepModel, path: str | Path, extra: dict | None = None) -> None:
    header = {
        "type": "dcca",
        "audio_dims": model.audio_branch.layer_dims,
        "visual_dims": model.visual_branch.layer_dims,
        "dropout": model.audio_branch.dropout_rate,
        "r": model.r,
        "reg": model.reg,
        "head_reg_x": model.cca_head.reg_x,
        "head_reg_y": model.cca_head.reg_y,
        "head_correlations": [float(c) for c in model.cca_head.correlations],
        "objective_history": model.objective_history,
        "n_audio_layers": len(model.audio_branch.weights),
        "n_visual_layers": len(model.visual_branch.weights),
        "config": extra or {},
    }
    with open(path, "wb") as fh:
        blockio.write_header(fh, _MODEL_MAGIC, header)
        for i, (w, b) in enumerate(zip(model.audio_branch.weights, model.audio_branch.biases)):
            blockio.write_array_block(fh, f"audio.w{i}", w)
            blockio.write_array_block(fh, f"audio.b{i}", b)
        for i, (w, b) in enumerate(zip(model.visual_branch.weights, model.visual_branch.biases)):
            blockio.write_array_block(fh, f"visual.w{i}", w)
            blockio.write_array_block(fh, f"visual.b{i}", b)
        for name, arr in (
            ("head.wx", model.cca_head.wx),
            ("head.wy", model.cca_head.wy),
            ("head.mean_x", model.cca_head.mean_x),
            ("head.mean_y", model.cca_head.mean_y),
        ):
            blockio.write_array_block(fh, name, arr)


def load_deep_model(path: str | Path) -> DeepModel:
    with open(path, "rb") as fh:
        header = blockio.read_header(fh, _MODEL_MAGIC)
        if header.get("type") != "dcca":
            raise FormatError(f"{path}: not a deep model file")
        n_a = int(header["n_audio_layers"])
        n_v = int(header["n_visual_layers"])
        blocks = blockio.read_blocks(fh, 2 * (n_a + n_v) + 4)
    audio = BranchNetwork(
        weights=[blocks[f"audio.w{i}"] for i in range(n_a)],
        biases=[blocks[f"audio.b{i}"] for i in range(n_a)],
        dropout_rate=float(header["dropout"]),
    )
    visual = BranchNetwork(
        weights=[blocks[f"visual.w{i}"] for i in range(n_v)],
        biases=[blocks[f"visual.b{i}"] for i in range(n_v)],
        dropout_rate=float(header["dropout"]),
    )
    head = LinearProjection(
        wx=blocks["head.wx"],
        wy=blocks["head.wy"],
        mean_x=blocks["head.mean_x"],
        mean_y=blocks["head.mean_y"],
        correlations=np.asarray(header["head_correlations"]),
        reg_x=float(header["head_reg_x"]),
        reg_y=float(header["head_reg_y"]),
    )
    return DeepModel(
        audio_branch=audio,
        visual_branch=visual,
        cca_head=head,
        r=int(header["r"]),
        reg=float(header["reg"]),
        objective_history=[float(v) for v in header.get("objective_history", [])],
    )
