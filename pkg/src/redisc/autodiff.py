"""Minimal reverse-mode autodiff over 2-D float64 arrays.

A Tape records every primitive op executed on tracked tensors in forward
order; backward() replays the pullbacks in reverse. Tensors without a tape
are constants, so mixing parameters (tracked leaves) with plain ndarrays
just works and an inference pass costs no bookkeeping.

Also here: the Adam step with decoupled weight decay, sinusoidal timestep
encodings, the binary checkpoint format, and a finite-difference gradient
checker. Everything is float64 internally; graph features enter as float32
and are upcast at the boundary.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp


class Tape:
    """Topologically ordered record of executed ops with saved activations."""

    def __init__(self):
        self._pullbacks: list = []

    def backward(self, loss: "Tensor2") -> None:
        """Seed d(loss)/d(loss) = 1 and accumulate gradients into every
        tracked tensor this tape saw. Untouched leaves keep zero grads."""
        if loss.tape is not self:
            raise ValueError("loss was not recorded on this tape")
        if loss.data.shape != (1, 1):
            raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
        loss.grad[...] = 1.0
        for pull in reversed(self._pullbacks):
            pull()


class Tensor2:
    """Row-major float64 matrix, optionally tracked on a tape."""

    __slots__ = ("data", "grad", "tape")

    def __init__(self, data, tape: Tape | None = None):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"Tensor2 is strictly 2-D, got ndim={arr.ndim}")
        self.data = arr
        self.tape = tape
        self.grad = np.zeros_like(arr) if tape is not None else None

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def _lift(x) -> Tensor2:
    return x if isinstance(x, Tensor2) else Tensor2(x)


def _tape_of(*tensors: Tensor2) -> Tape | None:
    tape = None
    for t in tensors:
        if t.tape is None:
            continue
        if tape is None:
            tape = t.tape
        elif tape is not t.tape:
            raise ValueError("inputs recorded on different tapes")
    return tape


# ---------------------------------------------------------------------------
# primitive ops

def matmul(x, w) -> Tensor2:
    x, w = _lift(x), _lift(w)
    tape = _tape_of(x, w)
    out = Tensor2(x.data @ w.data, tape)
    if tape is not None:
        def pull():
            if x.tape is not None:
                x.grad += out.grad @ w.data.T
            if w.tape is not None:
                w.grad += x.data.T @ out.grad
        tape._pullbacks.append(pull)
    return out


def affine(x, w, b) -> Tensor2:
    """x @ w + b with b a 1 x k row broadcast over rows."""
    x, w, b = _lift(x), _lift(w), _lift(b)
    if b.data.shape != (1, w.data.shape[1]):
        raise ValueError(f"bias shape {b.data.shape} does not match weight columns {w.data.shape[1]}")
    tape = _tape_of(x, w, b)
    out = Tensor2(x.data @ w.data + b.data, tape)
    if tape is not None:
        def pull():
            if x.tape is not None:
                x.grad += out.grad @ w.data.T
            if w.tape is not None:
                w.grad += x.data.T @ out.grad
            if b.tape is not None:
                b.grad += out.grad.sum(axis=0, keepdims=True)
        tape._pullbacks.append(pull)
    return out


def sparse_propagate(adj, h) -> Tensor2:
    """adj @ h for a constant sparse matrix; backward multiplies by adj^T."""
    mat = adj.mat64 if hasattr(adj, "mat64") else adj
    if not sp.issparse(mat):
        raise TypeError("adj must be sparse (or carry a .mat64)")
    h = _lift(h)
    if mat.shape[1] != h.data.shape[0]:
        raise ValueError(f"shape mismatch: {mat.shape} @ {h.data.shape}")
    out = Tensor2(mat @ h.data, h.tape)
    if h.tape is not None:
        def pull():
            h.grad += mat.T @ out.grad
        h.tape._pullbacks.append(pull)
    return out


def relu(x) -> Tensor2:
    x = _lift(x)
    out = Tensor2(np.maximum(x.data, 0.0), x.tape)
    if x.tape is not None:
        mask = x.data > 0.0
        def pull():
            x.grad += mask * out.grad
        x.tape._pullbacks.append(pull)
    return out


def sigmoid(x) -> Tensor2:
    x = _lift(x)
    # stable two-sided form: exp is only ever taken of a non-positive number
    s = np.where(x.data >= 0, 1.0 / (1.0 + np.exp(-np.abs(x.data))),
                 np.exp(-np.abs(x.data)) / (1.0 + np.exp(-np.abs(x.data))))
    out = Tensor2(s, x.tape)
    if x.tape is not None:
        def pull():
            x.grad += s * (1.0 - s) * out.grad
        x.tape._pullbacks.append(pull)
    return out


def add(a, b) -> Tensor2:
    a, b = _lift(a), _lift(b)
    if a.data.shape != b.data.shape:
        raise ValueError(f"add shape mismatch {a.data.shape} vs {b.data.shape}")
    tape = _tape_of(a, b)
    out = Tensor2(a.data + b.data, tape)
    if tape is not None:
        def pull():
            if a.tape is not None:
                a.grad += out.grad
            if b.tape is not None:
                b.grad += out.grad
        tape._pullbacks.append(pull)
    return out


def mul(a, b) -> Tensor2:
    a, b = _lift(a), _lift(b)
    if a.data.shape != b.data.shape:
        raise ValueError(f"mul shape mismatch {a.data.shape} vs {b.data.shape}")
    tape = _tape_of(a, b)
    out = Tensor2(a.data * b.data, tape)
    if tape is not None:
        def pull():
            if a.tape is not None:
                a.grad += b.data * out.grad
            if b.tape is not None:
                b.grad += a.data * out.grad
        tape._pullbacks.append(pull)
    return out


def concat_cols(a, b) -> Tensor2:
    a, b = _lift(a), _lift(b)
    if a.data.shape[0] != b.data.shape[0]:
        raise ValueError("concat_cols needs equal row counts")
    tape = _tape_of(a, b)
    ka = a.data.shape[1]
    out = Tensor2(np.concatenate([a.data, b.data], axis=1), tape)
    if tape is not None:
        def pull():
            if a.tape is not None:
                a.grad += out.grad[:, :ka]
            if b.tape is not None:
                b.grad += out.grad[:, ka:]
        tape._pullbacks.append(pull)
    return out


def tile_rows(x, n: int) -> Tensor2:
    """Broadcast a 1 x d row to n x d; backward sums over rows."""
    x = _lift(x)
    if x.data.shape[0] != 1:
        raise ValueError("tile_rows expects a single row")
    out = Tensor2(np.broadcast_to(x.data, (n, x.data.shape[1])).copy(), x.tape)
    if x.tape is not None:
        def pull():
            x.grad += out.grad.sum(axis=0, keepdims=True)
        x.tape._pullbacks.append(pull)
    return out


def sum_all(x) -> Tensor2:
    x = _lift(x)
    out = Tensor2(np.array([[x.data.sum()]]), x.tape)
    if x.tape is not None:
        def pull():
            x.grad += out.grad[0, 0]
        x.tape._pullbacks.append(pull)
    return out


def weighted_softmax_ce(logits, targets, weights, active) -> Tensor2:
    """Sum over active rows of weights_i * CE(targets_i, softmax(logits_i)).

    Inactive rows contribute nothing to the value or the gradient, so their
    target entries may be arbitrary. Computed via log-sum-exp; never forms
    an explicit probability for the loss value.
    """
    logits = _lift(logits)
    targets = np.asarray(targets)
    weights = np.asarray(weights, dtype=np.float64)
    active = np.asarray(active, dtype=bool)
    n, c = logits.data.shape
    if targets.shape != (n,) or weights.shape != (n,) or active.shape != (n,):
        raise ValueError("targets/weights/active must all have one entry per row")
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    idx = np.flatnonzero(active)
    tgt = targets[idx]
    if idx.size and (tgt.min() < 0 or tgt.max() >= c):
        raise ValueError(f"target outside [0, {c}) on an active row")

    sub = logits.data[idx]
    m = sub.max(axis=1, keepdims=True) if idx.size else np.zeros((0, 1))
    lse = m[:, 0] + np.log(np.exp(sub - m).sum(axis=1))
    w = weights[idx]
    value = float(np.dot(w, lse - sub[np.arange(idx.size), tgt])) if idx.size else 0.0
    out = Tensor2(np.array([[value]]), logits.tape)
    if logits.tape is not None:
        def pull():
            if idx.size:
                probs = np.exp(sub - lse[:, None])
                probs[np.arange(idx.size), tgt] -= 1.0
                logits.grad[idx] += out.grad[0, 0] * w[:, None] * probs
        logits.tape._pullbacks.append(pull)
    return out


def softmax_rows(a: np.ndarray) -> np.ndarray:
    """Plain-numpy row softmax (inference paths)."""
    z = a - a.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# timestep encoding

def time_encoding(t: float, dim: int) -> np.ndarray:
    """Interleaved sin/cos of t over geometric wavelengths spanning [1, 1e4].

    Returns a constant 1 x dim row. With the longest wavelength at 1e4 the
    map is injective for timesteps up to 1e4.
    """
    if dim < 2 or dim % 2 != 0:
        raise ValueError("encoding dim must be even and >= 2")
    half = dim // 2
    if half == 1:
        divisors = np.array([1e4])
    else:
        divisors = 10.0 ** (4.0 * np.arange(half) / (half - 1))
    ang = t / divisors
    out = np.empty((1, dim), dtype=np.float64)
    out[0, 0::2] = np.sin(ang)
    out[0, 1::2] = np.cos(ang)
    return out


# ---------------------------------------------------------------------------
# parameters and optimization

class ParamStore:
    """Named float64 matrices plus Adam moment state."""

    def __init__(self, values: dict[str, np.ndarray]):
        self.values: dict[str, np.ndarray] = {}
        for name, v in values.items():
            arr = np.ascontiguousarray(v, dtype=np.float64)
            if arr.ndim != 2:
                raise ValueError(f"parameter {name!r} must be 2-D")
            self.values[name] = arr
        self.m = {k: np.zeros_like(v) for k, v in self.values.items()}
        self.v = {k: np.zeros_like(v) for k, v in self.values.items()}
        self.step = 0

    def leaves(self, tape: Tape | None) -> dict[str, Tensor2]:
        """Leaf tensors sharing this store's memory; fresh zero grads when tracked."""
        return {name: Tensor2(arr, tape) for name, arr in self.values.items()}

    def copy(self) -> "ParamStore":
        return ParamStore({k: v.copy() for k, v in self.values.items()})


def collect_grads(leaves: dict[str, Tensor2]) -> dict[str, np.ndarray]:
    return {name: leaf.grad for name, leaf in leaves.items()}


def optimizer_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    weight_decay: float = 0.0,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One Adam step with decoupled weight decay (p -= lr*wd*p before moments).

    Rejects the whole step on any non-finite gradient, leaving parameters,
    moments, and the step counter untouched.
    """
    for name, g in grads.items():
        if g is not None and not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}; step rejected")
    store.step += 1
    t = store.step
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, p in store.values.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        if weight_decay != 0.0:
            p -= lr * weight_decay * p
        m = store.m[name]
        v = store.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


# ---------------------------------------------------------------------------
# checkpoints
#
# Layout (little-endian): u32 tensor count, then per tensor a u16 name byte
# length, the UTF-8 name, u32 rows, u32 cols, and rows*cols float64 values.

def save_checkpoint(store: ParamStore, path: str | Path) -> None:
    chunks = [len(store.values).to_bytes(4, "little")]
    for name, arr in store.values.items():
        nb = name.encode("utf-8")
        chunks.append(len(nb).to_bytes(2, "little"))
        chunks.append(nb)
        chunks.append(arr.shape[0].to_bytes(4, "little"))
        chunks.append(arr.shape[1].to_bytes(4, "little"))
        chunks.append(arr.astype("<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path) -> ParamStore:
    """Read a checkpoint; optimizer moments start fresh."""
    raw = Path(path).read_bytes()
    name = Path(path).name

    def need(offset, count, what):
        if offset + count > len(raw):
            raise ValueError(f"{name} @ byte {offset}: truncated while reading {what}")
        return offset + count

    pos = need(0, 4, "tensor count")
    count = int.from_bytes(raw[0:4], "little")
    values: dict[str, np.ndarray] = {}
    for _ in range(count):
        start = pos
        pos = need(pos, 2, "name length")
        nlen = int.from_bytes(raw[start:pos], "little")
        pos = need(pos, nlen, "name")
        pname = raw[pos - nlen:pos].decode("utf-8")
        pos = need(pos, 8, "shape")
        rows = int.from_bytes(raw[pos - 8:pos - 4], "little")
        cols = int.from_bytes(raw[pos - 4:pos], "little")
        pos = need(pos, 8 * rows * cols, f"data of {pname!r}")
        values[pname] = np.frombuffer(
            raw, dtype="<f8", count=rows * cols, offset=pos - 8 * rows * cols
        ).reshape(rows, cols).copy()
    if pos != len(raw):
        raise ValueError(f"{name} @ byte {pos}: {len(raw) - pos} trailing bytes")
    return ParamStore(values)


# ---------------------------------------------------------------------------
# gradient checking

def grad_check(f, store: ParamStore, rng: np.random.Generator, coords: int = 100, h: float = 1e-5) -> float:
    """Max relative error between backprop and central finite differences.

    ``f(store) -> (loss_value, grads)`` must be deterministic. At least
    ``coords`` coordinates are sampled across all parameters (all of them if
    the store is smaller). The relative error uses |a| + |b| floored at 1e-3
    so near-zero coordinates compare on the finite-difference noise floor.
    """
    _, grads = f(store)
    names = sorted(store.values)
    bounds = np.cumsum([store.values[n].size for n in names])
    total = int(bounds[-1])
    picks = rng.permutation(total)[: min(coords, total)]
    worst = 0.0
    for flat in picks:
        which = int(np.searchsorted(bounds, flat, side="right"))
        pname = names[which]
        local = int(flat - (bounds[which - 1] if which else 0))
        p = store.values[pname]
        orig = p.flat[local]
        p.flat[local] = orig + h
        lp, _ = f(store)
        p.flat[local] = orig - h
        lm, _ = f(store)
        p.flat[local] = orig
        fd = (lp - lm) / (2.0 * h)
        bp = grads[pname].flat[local]
        worst = max(worst, abs(bp - fd) / max(abs(bp) + abs(fd), 1e-3))
    return worst
