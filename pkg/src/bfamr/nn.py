"""Network building blocks and training utilities on top of the tape.

Multi-head attention and the feed-forward block are composed from tensor
primitives, so their gradients come for free.  Also here: Adam with the
inverse-square-root warmup schedule, global-norm clipping, a
finite-difference gradient checker, and bit-exact checkpoint I/O.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional

import numpy as np

from .tensor import (
    Parameter,
    Tensor,
    linear,
    matmul,
    mul,
    relu,
    reshape,
    softmax,
    swapaxes,
)

CHECKPOINT_MANIFEST = "manifest.json"
CHECKPOINT_TENSORS = "tensors.bin"


def xavier_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def normal_embedding(rng: np.random.Generator, rows: int, cols: int, std: float = 0.02) -> np.ndarray:
    return rng.normal(0.0, std, size=(rows, cols))


def multi_head_attention(
    query: Tensor,
    key: Tensor,
    value: Tensor,
    wq: Tensor,
    wk: Tensor,
    wv: Tensor,
    wo: Tensor,
    num_heads: int,
    mask: Optional[np.ndarray] = None,
) -> Tensor:
    """Scaled dot-product attention with ``num_heads`` heads.

    query (n, d), key/value (m, d); the four projections are (d, d).
    ``mask`` is broadcastable to (heads, n, m), True = attend.
    """
    n, d = query.shape
    m = key.shape[0]
    if d % num_heads != 0:
        raise ValueError(f"model dim {d} not divisible by {num_heads} heads")
    dh = d // num_heads

    def split_heads(x: Tensor, length: int) -> Tensor:
        # (len, d) -> (heads, len, dh)
        return swapaxes(reshape(x, (length, num_heads, dh)), 0, 1)

    q = split_heads(linear(query, wq), n)
    k = split_heads(linear(key, wk), m)
    v = split_heads(linear(value, wv), m)
    scores = mul(matmul(q, swapaxes(k, -1, -2)), Tensor(1.0 / np.sqrt(dh)))
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), (num_heads, n, m))
    weights = softmax(scores, axis=-1, mask=mask)
    mixed = matmul(weights, v)  # (heads, n, dh)
    merged = reshape(swapaxes(mixed, 0, 1), (n, d))
    return linear(merged, wo)


def ffn(x: Tensor, w1: Tensor, b1: Tensor, w2: Tensor, b2: Tensor) -> Tensor:
    """Position-wise feed-forward: Linear -> ReLU -> Linear."""
    return linear(relu(linear(x, w1, b1)), w2, b2)


def gate_output(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    return softmax(linear(x, weight, bias), axis=-1)


@dataclass
class AdamState:
    """Per-parameter first/second moment accumulators plus step count."""

    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def clip_global_norm(params: Dict[str, Parameter], max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most ``max_norm``."""
    total = 0.0
    for p in params.values():
        if p.grad is not None:
            total += float((p.grad**2).sum())
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for p in params.values():
            if p.grad is not None:
                p.grad *= scale
    return norm


def adam_step(params: Dict[str, Parameter], state: AdamState, lr: float) -> None:
    """One Adam update with bias correction; skips gradient-free params."""
    state.step += 1
    t = state.step
    for name, p in params.items():
        if p.grad is None:
            continue
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m *= state.beta1
        m += (1.0 - state.beta1) * p.grad
        v *= state.beta2
        v += (1.0 - state.beta2) * p.grad**2
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


def warmup_rsqrt_lr(step: int, model_dim: int, warmup: int, scale: float = 1.0) -> float:
    """lr = scale * d^-0.5 * min(step^-0.5, step * warmup^-1.5)."""
    if step < 1:
        raise ValueError("schedule steps start at 1")
    return scale * model_dim**-0.5 * min(step**-0.5, step * warmup**-1.5)


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: Dict[str, Parameter],
    h: float = 1e-5,
    max_entries: int = 6,
    rng: Optional[np.random.Generator] = None,
) -> Dict[str, float]:
    """Compare tape gradients against central differences.

    ``loss_fn`` must be a deterministic closure over ``params``.  For each
    parameter up to ``max_entries`` random entries are perturbed by +-h.
    Returns the max relative error per parameter (absolute error where
    both gradients are near zero).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    for p in params.values():
        p.zero_grad()
    loss_fn().backward()
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }
    report: Dict[str, float] = {}
    for name, p in params.items():
        flat = p.data.reshape(-1)
        size = flat.size
        if size <= max_entries:
            entries = np.arange(size)
        else:
            entries = rng.choice(size, size=max_entries, replace=False)
        worst = 0.0
        for i in entries:
            saved = flat[i]
            flat[i] = saved + h
            up = loss_fn().item()
            flat[i] = saved - h
            down = loss_fn().item()
            flat[i] = saved
            numeric = (up - down) / (2.0 * h)
            a = analytic[name].reshape(-1)[i]
            denom = max(abs(a), abs(numeric))
            err = abs(a - numeric) if denom < 1e-6 else abs(a - numeric) / denom
            worst = max(worst, err)
        report[name] = worst
    return report


def save_checkpoint(path: str | Path, params: Dict[str, Parameter], extra: Optional[dict] = None) -> None:
    """Write a manifest + raw little-endian float64 blob; bit-exact."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    with open(path / CHECKPOINT_TENSORS, "wb") as blob:
        for name in sorted(params):
            data = np.ascontiguousarray(params[name].data, dtype="<f8")
            raw = data.tobytes()
            blob.write(raw)
            entries.append(
                {
                    "name": name,
                    "shape": list(data.shape),
                    "offset": offset,
                    "bytes": len(raw),
                }
            )
            offset += len(raw)
    manifest = {"format": 1, "dtype": "<f8", "tensors": entries}
    if extra:
        manifest["extra"] = extra
    with open(path / CHECKPOINT_MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> tuple[Dict[str, np.ndarray], dict]:
    """Read arrays back from a checkpoint directory; returns (tensors, extra)."""
    path = Path(path)
    with open(path / CHECKPOINT_MANIFEST, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != 1:
        raise ValueError(f"unsupported checkpoint format {manifest.get('format')!r}")
    raw = (path / CHECKPOINT_TENSORS).read_bytes()
    tensors: Dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        start, nbytes = entry["offset"], entry["bytes"]
        arr = np.frombuffer(raw[start : start + nbytes], dtype="<f8")
        tensors[entry["name"]] = arr.reshape(entry["shape"]).astype(np.float64)
    return tensors, manifest.get("extra", {})


def load_params_into(params: Dict[str, Parameter], tensors: Dict[str, np.ndarray]) -> None:
    """Copy checkpoint arrays into live parameters; names and shapes must match."""
    missing = sorted(set(params) - set(tensors))
    surplus = sorted(set(tensors) - set(params))
    if missing or surplus:
        raise ValueError(f"checkpoint mismatch: missing {missing}, surplus {surplus}")
    for name, p in params.items():
        arr = tensors[name]
        if tuple(arr.shape) != tuple(p.data.shape):
            raise ValueError(
                f"checkpoint tensor {name} has shape {tuple(arr.shape)}, expected {tuple(p.data.shape)}"
            )
        p.data = arr.copy()
