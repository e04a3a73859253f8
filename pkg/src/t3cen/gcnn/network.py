"""Z2CNN-style group-equivariant classifier and its checkpoint format."""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..groups import HslGroup
from . import layers as L

MAGIC = b"T3CEN\0"
CHECKPOINT_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkConfig:
    orders: tuple = (1, 1, 1)
    width: int = 27
    depth: int = 3
    in_channels: int = 3
    num_classes: int = 10
    kernel: int = 3
    model: str = "double_cover"
    encoding: str = "rgb"
    pool: str = "max"
    budget_tolerance: float = 0.10
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(int(o) for o in self.orders))
        if len(self.orders) != 3 or min(self.orders) < 1:
            raise ConfigError(f"orders must be three positive integers, got {self.orders}")
        if self.depth < 1 or self.width < 1:
            raise ConfigError("depth and width must be positive")
        if self.kernel % 2 == 0:
            raise ConfigError("kernel must be odd")
        if self.model not in L.LIFT_MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.encoding not in L.ENCODINGS:
            raise ConfigError(f"unknown encoding {self.encoding!r}")

    @property
    def group(self) -> HslGroup:
        return HslGroup.of(*self.orders)

    @property
    def group_size(self) -> int:
        return math.prod(self.orders)

    @property
    def channels(self) -> int:
        """Per-layer channel count, scaled down by sqrt(|G|) to hold the parameter budget."""
        return max(1, round(self.width / math.sqrt(self.group_size)))

    @property
    def pool_after(self) -> int:
        return (self.depth - 1) // 2

    @property
    def kinds(self) -> tuple:
        if self.model == "lcer":
            return ("cyclic", "translation", "translation")
        return ("cyclic", "cyclic", "cyclic")

    def reference(self) -> "NetworkConfig":
        return replace(self, orders=(1, 1, 1))


def count_parameters(cfg: NetworkConfig) -> int:
    k, g, t = cfg.channels, cfg.group_size, cfg.kernel * cfg.kernel
    total = cfg.in_channels * k * t + k
    total += (cfg.depth - 1) * (k * k * g * t + k)
    total += k * cfg.num_classes + cfg.num_classes
    return total


def check_budget(cfg: NetworkConfig) -> float:
    """Relative deviation of the parameter count from the plain-CNN reference."""
    ref = count_parameters(cfg.reference())
    dev = count_parameters(cfg) / ref - 1.0
    if abs(dev) > cfg.budget_tolerance + 1e-12:
        raise ConfigError(
            f"parameter budget violated: {count_parameters(cfg)} vs reference {ref} "
            f"({dev:+.1%}, tolerance {cfg.budget_tolerance:.0%})"
        )
    return dev


class Network:
    """lift -> lifting conv -> (depth-1) x group conv, one 2x2 spatial max-pool mid-stack,
    group pool -> global spatial mean -> affine classifier. ReLU after every conv."""

    def __init__(self, cfg: NetworkConfig):
        self.cfg = cfg
        dtype = np.dtype(cfg.dtype)
        rng = np.random.default_rng(cfg.seed)
        k = cfg.channels
        self.lift = L.Lift(cfg.group, cfg.model, cfg.encoding, dtype)
        self.blocks: list[list[L.Layer]] = []
        self.blocks.append([L.LiftingConv(cfg.in_channels, k, cfg.kernel, rng, dtype), L.ReLU()])
        for _ in range(cfg.depth - 1):
            self.blocks.append([L.GroupConv(k, k, cfg.orders, cfg.kernel, rng, cfg.kinds, dtype), L.ReLU()])
        self.blocks[cfg.pool_after].append(L.SpatialMaxPool())
        self.head: list[L.Layer] = [L.GroupPool(cfg.pool), L.GlobalMeanPool(), L.Linear(k, cfg.num_classes, rng, dtype)]

    # parameters are declared block by block, weight before bias
    def layers(self) -> list[L.Layer]:
        return [layer for block in self.blocks for layer in block] + self.head

    def named_parameters(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers()):
            for name, p in layer.params.items():
                out.append((f"{i}.{type(layer).__name__}.{name}", p))
        return out

    def named_gradients(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers()):
            for name in layer.params:
                out.append((f"{i}.{type(layer).__name__}.{name}", layer.grads[name]))
        return out

    @property
    def num_parameters(self) -> int:
        return sum(p.size for _, p in self.named_parameters())

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel().astype(np.float64) for _, p in self.named_parameters()])

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.num_parameters:
            raise ValueError(f"expected {self.num_parameters} parameters, got {flat.size}")
        pos = 0
        for _, p in self.named_parameters():
            p[...] = flat[pos : pos + p.size].reshape(p.shape)
            pos += p.size

    def forward(self, hsl: np.ndarray, phase: np.ndarray | None = None, keep_features: bool = False):
        """Logits for a batch of planar HSL images (B, 3, H, W); RGB for the ``rgb_shift`` model.

        With ``keep_features`` also returns the group feature map after each
        block, each of shape (B, N, M, R, K, H, W).
        """
        x = self.lift.forward((hsl, phase))
        feats = []
        for block in self.blocks:
            for layer in block:
                x = layer.forward(x)
            feats.append(x)
        for layer in self.head:
            x = layer.forward(x)
        return (x, feats) if keep_features else x

    def backward(self, dlogits: np.ndarray) -> None:
        d = dlogits
        for layer in reversed(self.layers()):
            d = layer.backward(d)

    def activation_pattern(self) -> list[np.ndarray]:
        """ReLU masks and max-pool winners from the last forward pass."""
        out = []
        for layer in self.layers():
            if isinstance(layer, L.ReLU):
                out.append(layer._mask)
            elif isinstance(layer, L.SpatialMaxPool):
                out.append(layer._cache[1])
            elif isinstance(layer, L.GroupPool) and layer.mode == "max":
                out.append(layer._arg)
        return [a.copy() for a in out]

    def __call__(self, hsl, phase=None):
        return self.forward(hsl, phase)


def build_network(cfg: NetworkConfig, check: bool = True) -> Network:
    if check:
        check_budget(cfg)
    return Network(cfg)


# --- checkpoint ---------------------------------------------------------------
# magic "T3CEN\0" | u16 version | u32 config length | config JSON (utf-8)
# | u64 parameter count | float64 parameters, little-endian, declaration order


def save_checkpoint(path, net: Network) -> None:
    cfg = json.dumps(asdict(net.cfg), sort_keys=True).encode("utf-8")
    params = net.get_flat().astype("<f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HI", CHECKPOINT_VERSION, len(cfg)))
        fh.write(cfg)
        fh.write(struct.pack("<Q", params.size))
        fh.write(params.tobytes())


def load_checkpoint(path) -> Network:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:6] != MAGIC:
        raise ValueError(f"{path}: bad checkpoint magic")
    version, clen = struct.unpack_from("<HI", buf, 6)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    pos = 12
    cfg = NetworkConfig(**json.loads(buf[pos : pos + clen].decode("utf-8")))
    pos += clen
    (count,) = struct.unpack_from("<Q", buf, pos)
    pos += 8
    if len(buf) - pos != 8 * count:
        raise ValueError(f"{path}: truncated parameter payload")
    net = Network(cfg)
    net.set_flat(np.frombuffer(buf, dtype="<f8", count=count, offset=pos))
    return net
