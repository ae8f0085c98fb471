"""Closed-form CCA, Gaussian-kernel KCCA, and cluster-expanded CCA.

The linear fit whitens both views (symmetric eigendecomposition with an
eigenvalue floor), takes the SVD of the whitened cross-covariance, and maps
the singular vectors back through the inverse square roots. Canonical
correlations are the singular values clipped to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import blockio
from .clustering import expand_pairs
from .errors import FormatError, NumericalError, ResourceLimitError, SingularityError

EIG_FLOOR = 1e-12
DEFAULT_REG_SCALE = 1e-4
KCCA_N_CAP = 2000

_MODEL_MAGIC = b"AVCM"
_SIDES = {"audio": "x", "x": "x", "visual": "y", "y": "y"}


@dataclass
class LinearProjection:
    """Fitted projection pair (wx, wy) with centering vectors and canonical correlations."""

    wx: np.ndarray
    wy: np.ndarray
    mean_x: np.ndarray
    mean_y: np.ndarray
    correlations: np.ndarray
    reg_x: float
    reg_y: float

    @property
    def r(self) -> int:
        return self.wx.shape[1]


@dataclass
class KernelModel:
    """Dual-coefficient kernel CCA model; projection needs the training sets."""

    train_x: np.ndarray
    train_y: np.ndarray
    dual_x: np.ndarray
    dual_y: np.ndarray
    beta: float
    kappa: float
    kernel: str
    correlations: np.ndarray
    # training-kernel column means and grand means, cached for test centering
    col_means_x: np.ndarray = field(repr=False, default=None)
    col_means_y: np.ndarray = field(repr=False, default=None)
    grand_mean_x: float = 0.0
    grand_mean_y: float = 0.0
    offset_x: np.ndarray = field(repr=False, default=None)
    offset_y: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        if self.col_means_x is None or self.col_means_y is None:
            raise ValueError("kernel column means are required for out-of-sample projection")
        if self.offset_x is None:
            self.offset_x = np.zeros(self.dual_x.shape[1])
        if self.offset_y is None:
            self.offset_y = np.zeros(self.dual_y.shape[1])

    @property
    def r(self) -> int:
        return self.dual_x.shape[1]


def _as_matrix(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def _inv_sqrt_psd(m: np.ndarray, *, allow_floor: bool) -> np.ndarray:
    """(Sigma)^(-1/2) via symmetric eigendecomposition."""
    evals, evecs = np.linalg.eigh(m)
    if not allow_floor and evals.min() < EIG_FLOOR:
        raise SingularityError(
            f"covariance is rank deficient (min eigenvalue {evals.min():.3e}); pass reg > 0"
        )
    evals = np.maximum(evals, EIG_FLOOR)
    return (evecs / np.sqrt(evals)) @ evecs.T


def _resolve_reg(cov: np.ndarray, reg: float | None) -> float:
    if reg is None:
        return DEFAULT_REG_SCALE * float(np.trace(cov)) / cov.shape[0]
    if reg < 0:
        raise ValueError(f"reg must be >= 0, got {reg}")
    return float(reg)


def _whitening(x: np.ndarray, y: np.ndarray, reg: float | None):
    """Centered views, regularized covariances, and their inverse square roots."""
    n = x.shape[0]
    mean_x = x.mean(axis=0)
    mean_y = y.mean(axis=0)
    xc = x - mean_x
    yc = y - mean_y
    sxx = xc.T @ xc / (n - 1)
    syy = yc.T @ yc / (n - 1)
    reg_x = _resolve_reg(sxx, reg)
    reg_y = _resolve_reg(syy, reg)
    sxx += reg_x * np.eye(sxx.shape[0])
    syy += reg_y * np.eye(syy.shape[0])
    sxy = xc.T @ yc / (n - 1)
    allow_floor = reg_x > 0 and reg_y > 0
    isx = _inv_sqrt_psd(sxx, allow_floor=allow_floor)
    isy = _inv_sqrt_psd(syy, allow_floor=allow_floor)
    return mean_x, mean_y, xc, yc, isx, isy, sxy, reg_x, reg_y


def fit_cca(x: np.ndarray, y: np.ndarray, r: int, reg: float | None = None) -> LinearProjection:
    """Maximize the correlation between linear projections of the two views.

    reg is the ridge added to each empirical covariance; None picks
    1e-4 * trace / dim per view. Correlations come back non-increasing,
    clipped to [0, 1].
    """
    x = _as_matrix(x, "x")
    y = _as_matrix(y, "y")
    n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"views must pair rows: {n} vs {y.shape[0]}")
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if not 1 <= r <= min(x.shape[1], y.shape[1]):
        raise ValueError(f"r must be in [1, {min(x.shape[1], y.shape[1])}], got {r}")
    mean_x, mean_y, _, _, isx, isy, sxy, reg_x, reg_y = _whitening(x, y, reg)
    t = isx @ sxy @ isy
    u, s, vt = np.linalg.svd(t, full_matrices=False)
    return LinearProjection(
        wx=isx @ u[:, :r],
        wy=isy @ vt.T[:, :r],
        mean_x=mean_x,
        mean_y=mean_y,
        correlations=np.clip(s[:r], 0.0, 1.0),
        reg_x=reg_x,
        reg_y=reg_y,
    )


def project(model: LinearProjection, features: np.ndarray, side: str) -> np.ndarray:
    """(features - mean) @ W for the chosen side ('audio'/'x' or 'visual'/'y')."""
    if side not in _SIDES:
        raise ValueError(f"side must be one of {sorted(_SIDES)}, got {side!r}")
    features = np.asarray(features, dtype=np.float64)
    squeeze = features.ndim == 1
    features = np.atleast_2d(features)
    w, mean = (model.wx, model.mean_x) if _SIDES[side] == "x" else (model.wy, model.mean_y)
    if features.shape[1] != w.shape[0]:
        raise ValueError(f"feature dim {features.shape[1]} does not match side dim {w.shape[0]}")
    out = (features - mean) @ w
    return out[0] if squeeze else out


def _gaussian_kernel(a: np.ndarray, b: np.ndarray, beta: float) -> np.ndarray:
    a_sq = np.einsum("ij,ij->i", a, a)[:, None]
    b_sq = np.einsum("ij,ij->i", b, b)[None, :]
    sq = np.maximum(a_sq - 2.0 * a @ b.T + b_sq, 0.0)
    return np.exp(-beta * sq)


def _kernel(a: np.ndarray, b: np.ndarray, kind: str, beta: float) -> np.ndarray:
    if kind == "gaussian":
        return _gaussian_kernel(a, b, beta)
    if kind == "linear":
        return a @ b.T
    raise ValueError(f"unknown kernel {kind!r}")


def _kernel_features(k_centered: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Explicit feature map Phi = V sqrt(L) of a centered kernel matrix."""
    evals, evecs = np.linalg.eigh(k_centered)
    if evals.min() < -1e-8 * max(evals.max(), 1.0):
        raise NumericalError(f"kernel matrix not PSD after centering (min eigenvalue {evals.min():.3e})")
    keep = evals > max(evals.max(), 0.0) * 1e-12
    evals = evals[keep]
    evecs = evecs[:, keep]
    return evecs * np.sqrt(evals), evecs, evals


def fit_kcca(
    x: np.ndarray,
    y: np.ndarray,
    r: int,
    beta: float = 0.4,
    kappa: float = 1e-3,
    kernel: str = "gaussian",
    n_cap: int = KCCA_N_CAP,
) -> KernelModel:
    """Kernel CCA with ridge kappa per view; k(a, b) = exp(-beta * ||a - b||^2).

    The centered kernels are eigendecomposed into explicit feature maps and
    passed through the same whitened-SVD core as fit_cca; primal weights are
    mapped back to dual coefficients. O(n^3): capped at desk scale.
    """
    x = _as_matrix(x, "x")
    y = _as_matrix(y, "y")
    n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"views must pair rows: {n} vs {y.shape[0]}")
    if n > n_cap:
        raise ResourceLimitError(
            f"KCCA solve is O(n^3); n={n} exceeds the cap of {n_cap}. "
            "Subsample the training pairs or raise the cap explicitly."
        )
    if beta <= 0 or kappa <= 0:
        raise ValueError("beta and kappa must be > 0")
    kx = _kernel(x, x, kernel, beta)
    ky = _kernel(y, y, kernel, beta)
    col_means_x = kx.mean(axis=0)
    col_means_y = ky.mean(axis=0)
    grand_x = float(kx.mean())
    grand_y = float(ky.mean())
    h = np.eye(n) - np.full((n, n), 1.0 / n)
    phi_x, vx, lx = _kernel_features(h @ kx @ h)
    phi_y, vy, ly = _kernel_features(h @ ky @ h)
    if not 1 <= r <= min(phi_x.shape[1], phi_y.shape[1]):
        raise ValueError(
            f"r must be in [1, {min(phi_x.shape[1], phi_y.shape[1])}] for this kernel rank, got {r}"
        )
    base = fit_cca(phi_x, phi_y, r, reg=kappa)
    dual_x = (vx / np.sqrt(lx)) @ base.wx
    dual_y = (vy / np.sqrt(ly)) @ base.wy
    return KernelModel(
        train_x=x,
        train_y=y,
        dual_x=dual_x,
        dual_y=dual_y,
        beta=float(beta),
        kappa=float(kappa),
        kernel=kernel,
        correlations=base.correlations,
        col_means_x=col_means_x,
        col_means_y=col_means_y,
        grand_mean_x=grand_x,
        grand_mean_y=grand_y,
        offset_x=base.mean_x @ base.wx,
        offset_y=base.mean_y @ base.wy,
    )


def kernel_project(model: KernelModel, features: np.ndarray, side: str) -> np.ndarray:
    """Project new points through the dual coefficients with training-set centering."""
    if side not in _SIDES:
        raise ValueError(f"side must be one of {sorted(_SIDES)}, got {side!r}")
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if _SIDES[side] == "x":
        train, dual, col_means, grand, offset = (
            model.train_x, model.dual_x, model.col_means_x, model.grand_mean_x, model.offset_x,
        )
    else:
        train, dual, col_means, grand, offset = (
            model.train_y, model.dual_y, model.col_means_y, model.grand_mean_y, model.offset_y,
        )
    if features.shape[1] != train.shape[1]:
        raise ValueError(f"feature dim {features.shape[1]} does not match training dim {train.shape[1]}")
    kt = _kernel(features, train, model.kernel, model.beta)
    kt_centered = kt - kt.mean(axis=1, keepdims=True) - col_means[None, :] + grand
    return kt_centered @ dual - offset


def fit_cluster_cca(
    x: np.ndarray,
    y: np.ndarray,
    labels: np.ndarray,
    f: float,
    r: int,
    reg: float | None = None,
    seed: int = 0,
    target_count: int | None = None,
) -> LinearProjection:
    """CCA over cluster-expanded pairs; f = 0 reduces to the identity pairing."""
    x = _as_matrix(x, "x")
    y = _as_matrix(y, "y")
    labels = np.asarray(labels)
    if labels.shape[0] != x.shape[0] or y.shape[0] != x.shape[0]:
        raise ValueError("labels must align with the paired rows")
    pairs = expand_pairs(labels, None, f=f, seed=seed, target_count=target_count)
    return fit_cca(x[pairs.audio_indices], y[pairs.visual_indices], r, reg)


def save_projection(model: LinearProjection, path: str | Path, extra: dict | None = None) -> None:
    header = {
        "type": "linear-cca",
        "dx": int(model.wx.shape[0]),
        "dy": int(model.wy.shape[0]),
        "r": int(model.r),
        "reg_x": model.reg_x,
        "reg_y": model.reg_y,
        "correlations": [float(c) for c in model.correlations],
        "config": extra or {},
    }
    with open(path, "wb") as fh:
        blockio.write_header(fh, _MODEL_MAGIC, header)
        for name, arr in (
            ("wx", model.wx), ("wy", model.wy), ("mean_x", model.mean_x), ("mean_y", model.mean_y),
        ):
            blockio.write_array_block(fh, name, arr)


def save_kernel_model(model: KernelModel, path: str | Path, extra: dict | None = None) -> None:
    header = {
        "type": "kcca",
        "beta": model.beta,
        "kappa": model.kappa,
        "kernel": model.kernel,
        "grand_mean_x": model.grand_mean_x,
        "grand_mean_y": model.grand_mean_y,
        "correlations": [float(c) for c in model.correlations],
        "config": extra or {},
    }
    with open(path, "wb") as fh:
        blockio.write_header(fh, _MODEL_MAGIC, header)
        for name, arr in (
            ("train_x", model.train_x), ("train_y", model.train_y),
            ("dual_x", model.dual_x), ("dual_y", model.dual_y),
            ("col_means_x", model.col_means_x), ("col_means_y", model.col_means_y),
            ("offset_x", model.offset_x), ("offset_y", model.offset_y),
        ):
            blockio.write_array_block(fh, name, arr)


def load_cca_model(path: str | Path) -> LinearProjection | KernelModel:
    with open(path, "rb") as fh:
        header = blockio.read_header(fh, _MODEL_MAGIC)
        if header["type"] == "linear-cca":
            blocks = blockio.read_blocks(fh, 4)
            return LinearProjection(
                wx=blocks["wx"],
                wy=blocks["wy"],
                mean_x=blocks["mean_x"],
                mean_y=blocks["mean_y"],
                correlations=np.asarray(header["correlations"]),
                reg_x=float(header["reg_x"]),
                reg_y=float(header["reg_y"]),
            )
        if header["type"] == "kcca":
            blocks = blockio.read_blocks(fh, 8)
            return KernelModel(
                train_x=blocks["train_x"],
                train_y=blocks["train_y"],
                dual_x=blocks["dual_x"],
                dual_y=blocks["dual_y"],
                beta=float(header["beta"]),
                kappa=float(header["kappa"]),
                kernel=str(header["kernel"]),
                correlations=np.asarray(header["correlations"]),
                col_means_x=blocks["col_means_x"],
                col_means_y=blocks["col_means_y"],
                grand_mean_x=float(header["grand_mean_x"]),
                grand_mean_y=float(header["grand_mean_y"]),
                offset_x=blocks["offset_x"],
                offset_y=blocks["offset_y"],
            )
    raise FormatError(f"{path}: unknown model type {header['type']!r}")
