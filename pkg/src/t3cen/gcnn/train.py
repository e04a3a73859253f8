"""Cross-entropy training with SGD, evaluation, and finite-difference gradient checks."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .network import Network

log = logging.getLogger(__name__)


class NumericError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 5
    batch_size: int = 128
    momentum: float = 0.9
    seed: int = 0


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = logits.shape[0]
    loss = -logp[np.arange(n), labels].mean()
    grad = np.exp(logp)
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n


def loss_and_grad(net: Network, hsl, labels, phase=None) -> float:
    logits = net.forward(hsl, phase)
    loss, dlogits = softmax_cross_entropy(logits.astype(np.float64), labels)
    net.backward(dlogits.astype(logits.dtype))
    return loss


class SGD:
    """SGD with optional heavy-ball momentum; updates parameters in place."""

    def __init__(self, net: Network, lr: float, momentum: float = 0.0):
        self.net, self.lr, self.momentum = net, lr, momentum
        self.velocity = [np.zeros_like(p) for _, p in net.named_parameters()]

    def step(self) -> None:
        params = [p for _, p in self.net.named_parameters()]
        grads = [g for _, g in self.net.named_gradients()]
        for p, g, v in zip(params, grads, self.velocity):
            if self.momentum:
                v *= self.momentum
                v += g
                p -= (self.lr * v).astype(p.dtype)
            else:
                p -= (self.lr * g).astype(p.dtype)


def predict(net: Network, hsl: np.ndarray, batch_size: int = 256, phase=None) -> np.ndarray:
    out = []
    for i in range(0, len(hsl), batch_size):
        ph = None if phase is None else phase[i : i + batch_size]
        out.append(net.forward(hsl[i : i + batch_size], ph).argmax(axis=1))
    return np.concatenate(out) if out else np.zeros(0, dtype=int)


def error_rate(net: Network, hsl: np.ndarray, labels: np.ndarray, batch_size: int = 256, phase=None) -> float:
    """Classification error in percent."""
    if len(labels) == 0:
        return 0.0
    return float(100.0 * np.mean(predict(net, hsl, batch_size, phase) != labels))


def train(net: Network, hsl: np.ndarray, labels: np.ndarray, hyper: TrainConfig,
          eval_sets: Optional[dict] = None, on_epoch: Optional[Callable[[dict], None]] = None) -> list[dict]:
    """Train in place on planar HSL images; returns one metrics dict per epoch.

    ``eval_sets`` maps a name to (hsl, labels); their error is reported after
    every epoch under ``<name>_error``.
    """
    rng = np.random.default_rng(hyper.seed)
    opt = SGD(net, hyper.lr, hyper.momentum)
    n = len(labels)
    history = []
    for epoch in range(1, hyper.epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(n)
        total, correct = 0.0, 0
        for i in range(0, n, hyper.batch_size):
            idx = order[i : i + hyper.batch_size]
            logits = net.forward(hsl[idx])
            loss, dlogits = softmax_cross_entropy(logits.astype(np.float64), labels[idx])
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch starting {i}")
            net.backward(dlogits.astype(logits.dtype))
            opt.step()
            total += loss * len(idx)
            correct += int((logits.argmax(axis=1) == labels[idx]).sum())
        if not all(np.isfinite(p).all() for _, p in net.named_parameters()):
            raise NumericError(f"non-finite parameters after epoch {epoch}")
        rec = {
            "epoch": epoch,
            "train_loss": total / max(n, 1),
            "train_accuracy": 100.0 * correct / max(n, 1),
            "seconds": time.perf_counter() - start,
        }
        for name, (eh, el) in (eval_sets or {}).items():
            rec[f"{name}_error"] = error_rate(net, eh, el)
        log.info("epoch %d %s", epoch, json.dumps(rec))
        history.append(rec)
        if on_epoch is not None:
            on_epoch(rec)
    return history


def gradient_check(net: Network, hsl: np.ndarray, labels: np.ndarray, n_params: int = 100,
                   eps: float = 1e-5, seed: int = 0, report: Optional[dict] = None) -> float:
    """Max relative error between backprop and central differences on random parameters.

    The network must be in float64. A parameter whose +-eps perturbation
    flips a ReLU or a max-pool winner is skipped: the loss has a kink inside
    the stencil there, so the finite difference is not a derivative. Skips are
    counted in ``report['skipped']`` when a dict is passed; ``report['entries']``
    lists (parameter name, analytic, numeric) for every checked parameter.
    """
    params = net.named_parameters()
    if any(p.dtype != np.float64 for _, p in params):
        raise TypeError("gradient_check needs a float64 network")
    loss_and_grad(net, hsl, labels)
    pattern = net.activation_pattern()
    grads = [g.copy() for _, g in net.named_gradients()]
    sizes = np.array([p.size for _, p in params])
    bounds = np.cumsum(sizes)
    order = np.random.default_rng(seed).permutation(int(sizes.sum()))

    def same_pattern() -> bool:
        return all(np.array_equal(a, b) for a, b in zip(pattern, net.activation_pattern()))

    worst, checked, skipped, entries = 0.0, 0, 0, []
    for flat in order:
        if checked == n_params:
            break
        which = int(np.searchsorted(bounds, flat, side="right"))
        local = flat - (bounds[which - 1] if which else 0)
        p = params[which][1].reshape(-1)
        old = p[local]
        p[local] = old + eps
        up = softmax_cross_entropy(net.forward(hsl), labels)[0]
        smooth = same_pattern()
        p[local] = old - eps
        down = softmax_cross_entropy(net.forward(hsl), labels)[0]
        smooth = smooth and same_pattern()
        p[local] = old
        if not smooth:
            skipped += 1
            continue
        analytic = grads[which].reshape(-1)[local]
        numeric = (up - down) / (2 * eps)
        denom = max(abs(analytic), abs(numeric))
        worst = max(worst, 0.0 if denom == 0 else abs(analytic - numeric) / denom)
        entries.append((params[which][0], float(analytic), float(numeric)))
        checked += 1
    if report is not None:
        report.update(checked=checked, skipped=skipped, entries=entries)
    return worst


def save_metrics(path, history: list[dict]) -> None:
    with open(path, "w") as fh:
        for rec in history:
            fh.write(json.dumps(rec) + "\n")


__all__ = [
    "TrainConfig", "SGD", "NumericError", "softmax_cross_entropy", "loss_and_grad",
    "train", "predict", "error_rate", "gradient_check", "save_metrics",
]
