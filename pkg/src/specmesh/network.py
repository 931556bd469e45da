"""Spectral CNN on a coarsening hierarchy: polynomial convolution layers with
hand-derived backpropagation, ReLU, real-descendant average pooling, a
fully connected softmax head, and SGD with momentum and step decay."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coarsen import CoarseningHierarchy, pool_signal, unpool_signal
from .errors import UserError
from .operators import DEFAULT_LAMBDA_INFLATION, NormalizedOperator
from .poly import get_family, poly_basis_apply


@dataclass
class LayerSpec:
    """One conv stage: filter count, polynomial order count, pooling exponent."""

    filters_out: int
    K: int
    pool_p: int

    def __post_init__(self):
        if self.filters_out < 1 or self.K < 1 or self.pool_p < 0:
            raise UserError("invalid layer spec")


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    lr0: float = 1e-3
    lr_decay: float = 0.05
    decay_every: int = 20
    momentum: float = 0.9
    l2_weight: float = 5e-4
    seed: int = 0
    hidden: int = 128
    include_conv_l2: bool = False
    use_bias: bool = True
    positive_class: int = 1


def learning_rate(config: TrainConfig, epoch: int) -> float:
    """Step decay: lr0 * lr_decay ** (epoch // decay_every)."""
    return config.lr0 * config.lr_decay ** (epoch // config.decay_every)


@dataclass
class Metrics:
    """Classification metrics in percent; gmean = sqrt(sen * spe)."""

    accuracy: float
    sensitivity: float
    specificity: float
    gmean: float
    tp: int
    tn: int
    fp: int
    fn: int

    @classmethod
    def from_predictions(cls, labels, predictions, positive_class=1) -> "Metrics":
        labels = np.asarray(labels)
        predictions = np.asarray(predictions)
        pos = labels == positive_class
        tp = int(np.sum(pos & (predictions == positive_class)))
        fn = int(np.sum(pos & (predictions != positive_class)))
        tn = int(np.sum(~pos & (predictions != positive_class)))
        fp = int(np.sum(~pos & (predictions == positive_class)))
        n = len(labels)
        acc = 100.0 * (tp + tn) / n if n else 0.0
        sen = 100.0 * tp / (tp + fn) if tp + fn else 0.0
        spe = 100.0 * tn / (tn + fp) if tn + fp else 0.0
        return cls(
            accuracy=acc,
            sensitivity=sen,
            specificity=spe,
            gmean=math.sqrt(sen * spe),
            tp=tp,
            tn=tn,
            fp=fp,
            fn=fn,
        )

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "gmean": self.gmean,
            "confusion": {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn},
        }


def relu(X: np.ndarray) -> np.ndarray:
    return np.maximum(X, 0.0)


def relu_backward(X: np.ndarray, dY: np.ndarray) -> np.ndarray:
    """Subgradient at 0 taken as 0."""
    return np.where(X > 0.0, dY, 0.0)


def conv_forward(op: NormalizedOperator, X: np.ndarray, theta: np.ndarray, bias):
    """Multi-channel polynomial convolution.

    X has shape (V, B, C_in); theta (K, C_in, C_out); returns (Y, cache) with
    Y[v, b, o] = sum_{k,i} theta[k,i,o] * (P_k X)[v, b, i] + bias[o].
    """
    V, B, Ci = X.shape
    K = theta.shape[0]
    if theta.shape[1] != Ci:
        raise UserError(
            f"theta expects {theta.shape[1]} input channels, signal has {Ci}"
        )
    basis = poly_basis_apply(op, X.reshape(V, B * Ci), K).reshape(K, V, B, Ci)
    flat = basis.reshape(K, V * B, Ci)
    Co = theta.shape[2]
    Y = np.zeros((V * B, Co))
    for k in range(K):
        Y += flat[k] @ theta[k]
    Y = Y.reshape(V, B, Co)
    if bias is not None:
        Y += bias
    return Y, (basis, theta)


def conv_backward(op: NormalizedOperator, cache, dY: np.ndarray):
    """Gradients of conv_forward; the input gradient runs the recurrence on the
    transposed operator because the normalized operator is asymmetric."""
    basis, theta = cache
    K, V, B, Ci = basis.shape
    Co = dY.shape[2]
    flat = basis.reshape(K, V * B, Ci)
    dY_flat = dY.reshape(V * B, Co)
    dTheta = np.stack([flat[k].T @ dY_flat for k in range(K)])
    dBias = dY.sum(axis=(0, 1))
    basis_t = poly_basis_apply(op, dY.reshape(V, B * Co), K, transpose=True)
    flat_t = basis_t.reshape(K, V * B, Co)
    dX = np.zeros((V * B, Ci))
    for k in range(K):
        dX += flat_t[k] @ theta[k].T
    return dX.reshape(V, B, Ci), dTheta, dBias


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient with respect to the logits."""
    B = len(labels)
    if np.any(labels < 0) or np.any(labels >= probs.shape[1]):
        raise UserError("label out of range")
    p = np.clip(probs[np.arange(B), labels], 1e-300, None)
    loss = -np.mean(np.log(p))
    dlogits = probs.copy()
    dlogits[np.arange(B), labels] -= 1.0
    return loss, dlogits / B


class SpectralMeshModel:
    """Conv/ReLU/pool stages over a coarsening hierarchy, then FC-128 softmax."""

    def __init__(
        self,
        hierarchy: CoarseningHierarchy,
        family: str,
        specs: list,
        n_classes: int = 2,
        in_channels: int = 1,
        hidden: int = 128,
        use_bias: bool = True,
        lambda_inflation: float = DEFAULT_LAMBDA_INFLATION,
    ):
        get_family(family)
        total_p = sum(s.pool_p for s in specs)
        if total_p > hierarchy.depth:
            raise UserError(
                f"layer pooling consumes {total_p} levels, hierarchy has "
                f"{hierarchy.depth}"
            )
        self.hierarchy = hierarchy
        self.family = family
        self.specs = list(specs)
        self.n_classes = n_classes
        self.in_channels = in_channels
        self.hidden = hidden
        self.use_bias = use_bias
        self.lambda_inflation = lambda_inflation

        self.levels = []
        lvl = 0
        for s in self.specs:
            self.levels.append(lvl)
            lvl += s.pool_p
        self.out_level = lvl
        self.flat_features = hierarchy.padded_size(self.out_level) * (
            self.specs[-1].filters_out if self.specs else in_channels
        )
        self.params: dict | None = None

    def operator(self, stage: int) -> NormalizedOperator:
        return self.hierarchy.normalized_operator(
            self.levels[stage], self.family, self.lambda_inflation
        )

    def init_params(self, seed: int = 0) -> dict:
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
        rng = np.random.default_rng(seed)
        params = {}
        c_in = self.in_channels
        for i, s in enumerate(self.specs):
            bound = 1.0 / math.sqrt(s.K * c_in)
            params[f"conv{i}_theta"] = rng.uniform(
                -bound, bound, size=(s.K, c_in, s.filters_out)
            )
            if self.use_bias:
                params[f"conv{i}_bias"] = np.zeros(s.filters_out)
            c_in = s.filters_out
        bound = 1.0 / math.sqrt(self.flat_features)
        params["fc_w"] = rng.uniform(
            -bound, bound, size=(self.flat_features, self.hidden)
        )
        params["fc_b"] = np.zeros(self.hidden)
        bound = 1.0 / math.sqrt(self.hidden)
        params["out_w"] = rng.uniform(-bound, bound, size=(self.hidden, self.n_classes))
        params["out_b"] = np.zeros(self.n_classes)
        self.params = params
        return params

    def _prep_input(self, signals: np.ndarray) -> np.ndarray:
        signals = np.asarray(signals, dtype=np.float64)
        if signals.ndim == 2:
            signals = signals[:, :, None]  # (B, n, 1)
        padded = self.hierarchy.scatter(signals.transpose(0, 2, 1))  # (B, C, Vp)
        return padded.transpose(2, 0, 1)  # (Vp, B, C)

    def forward(self, signals: np.ndarray):
        """Class probabilities plus the cache needed for backpropagation."""
        if self.params is None:
            raise UserError("model parameters not initialized")
        p = self.params
        X = self._prep_input(signals)
        cache = {"conv": [], "relu": [], "pool_in": []}
        for i, s in enumerate(self.specs):
            op = self.operator(i)
            bias = p.get(f"conv{i}_bias")
            Y, conv_cache = conv_forward(op, X, p[f"conv{i}_theta"], bias)
            cache["conv"].append(conv_cache)
            cache["relu"].append(Y)
            Z = relu(Y)
            cache["pool_in"].append(Z)
            if s.pool_p > 0:
                Z = pool_signal(self.hierarchy, self.levels[i], Z, 2**s.pool_p)
            X = Z
        B = X.shape[1]
        flat = X.transpose(1, 0, 2).reshape(B, -1)
        cache["flat"] = flat
        h_pre = flat @ p["fc_w"] + p["fc_b"]
        cache["h_pre"] = h_pre
        h = relu(h_pre)
        cache["h"] = h
        logits = h @ p["out_w"] + p["out_b"]
        probs = softmax(logits)
        cache["shape_after_pool"] = X.shape
        return probs, cache

    def loss_and_grads(self, signals, labels, l2_weight=0.0, include_conv_l2=False):
        """Cross-entropy + l2 on FC weights; returns (loss, grads, probs)."""
        p = self.params
        labels = np.asarray(labels)
        probs, cache = self.forward(signals)
        loss, dlogits = cross_entropy(probs, labels)
        loss += l2_weight * (np.sum(p["fc_w"] ** 2) + np.sum(p["out_w"] ** 2))
        if include_conv_l2:
            for i in range(len(self.specs)):
                loss += l2_weight * np.sum(p[f"conv{i}_theta"] ** 2)

        grads = {}
        h = cache["h"]
        grads["out_w"] = h.T @ dlogits + 2.0 * l2_weight * p["out_w"]
        grads["out_b"] = dlogits.sum(axis=0)
        dh = relu_backward(cache["h_pre"], dlogits @ p["out_w"].T)
        flat = cache["flat"]
        grads["fc_w"] = flat.T @ dh + 2.0 * l2_weight * p["fc_w"]
        grads["fc_b"] = dh.sum(axis=0)
        dflat = dh @ p["fc_w"].T

        Vp, B, C = cache["shape_after_pool"]
        dX = dflat.reshape(B, Vp, C).transpose(1, 0, 2)
        for i in range(len(self.specs) - 1, -1, -1):
            s = self.specs[i]
            if s.pool_p > 0:
                dX = unpool_signal(self.hierarchy, self.levels[i], dX, 2**s.pool_p)
            dX = relu_backward(cache["relu"][i], dX)
            op = self.operator(i)
            dX, dTheta, dBias = conv_backward(op, cache["conv"][i], dX)
            grads[f"conv{i}_theta"] = dTheta
            if include_conv_l2:
                grads[f"conv{i}_theta"] += 2.0 * l2_weight * p[f"conv{i}_theta"]
            if self.use_bias:
                grads[f"conv{i}_bias"] = dBias
        return loss, grads, probs

    def predict(self, signals) -> np.ndarray:
        probs, _ = self.forward(signals)
        return np.argmax(probs, axis=1)


def sgd_step(params: dict, grads: dict, velocity: dict, lr: float, momentum: float):
    """v <- momentum v - lr g; p <- p + v (in place)."""
    for key, g in grads.items():
        v = velocity[key]
        v *= momentum
        v -= lr * g
        params[key] += v


def train(model: SpectralMeshModel, train_data, val_data, config: TrainConfig):
    """Mini-batch SGD with momentum; deterministic given config.seed.

    Returns the per-epoch history as a list of dicts; final parameters stay on
    the model.
    """
    n = len(train_data.labels)
    if n == 0:
        raise UserError("empty training set")
    if len(np.unique(train_data.labels)) < 2:
        raise UserError("training set must contain every class")
    if model.params is None:
        model.init_params(config.seed)
    rng = np.random.default_rng(config.seed + 1)
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}

    history = []
    for epoch in range(config.epochs):
        lr = learning_rate(config, epoch)
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads, _ = model.loss_and_grads(
                train_data.signals[idx],
                train_data.labels[idx],
                l2_weight=config.l2_weight,
                include_conv_l2=config.include_conv_l2,
            )
            sgd_step(model.params, grads, velocity, lr, config.momentum)
            losses.append(loss)
        row = {"epoch": epoch, "lr": lr, "train_loss": float(np.mean(losses))}
        if val_data is not None and len(val_data.labels):
            probs, _ = model.forward(val_data.signals)
            val_loss, _ = cross_entropy(probs, np.asarray(val_data.labels))
            preds = np.argmax(probs, axis=1)
            row["val_loss"] = float(val_loss)
            row["val_acc"] = float(np.mean(preds == val_data.labels) * 100.0)
        history.append(row)
    return model.params, history


def evaluate(model: SpectralMeshModel, data, positive_class: int = 1) -> Metrics:
    if len(data.labels) == 0:
        raise UserError("empty evaluation set")
    preds = model.predict(data.signals)
    return Metrics.from_predictions(data.labels, preds, positive_class)
