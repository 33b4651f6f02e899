"""Dense-network substrate: MLPs with an optional attention block,
reverse-mode gradients, classification losses, and Adam.

Everything runs in float64 numpy on explicit flat parameter vectors, so
gradient checks against finite differences are meaningful and training
is bit-reproducible from a seed.  The graph machinery is deliberately
tiny: a handful of array ops, each with a hand-written backward rule.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, NumericError, ShapeError

# ---------------------------------------------------------------------------
# Autodiff core
# ---------------------------------------------------------------------------


class Tensor:
    """A node in the computation graph."""

    __slots__ = ("value", "grad", "parents", "bwd", "needs_grad")

    def __init__(self, value, parents=(), bwd=None, needs_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.bwd = bwd
        self.needs_grad = needs_grad or any(p.needs_grad for p in parents)

    @property
    def shape(self):
        return self.value.shape

    def add_grad(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g


def leaf(value) -> Tensor:
    return Tensor(value, needs_grad=True)


def const(value) -> Tensor:
    return Tensor(value)


def _topo_order(roots: list[Tensor]) -> list[Tensor]:
    """Postorder over the needs_grad subgraph (valid for DAGs)."""
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(r, False) for r in roots]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.needs_grad and id(p) not in visited:
                stack.append((p, False))
    return order


def run_backward(roots: Tensor | list[tuple[Tensor, np.ndarray | None]]) -> None:
    """Accumulate gradients into every reachable needs_grad leaf.

    Accepts either a scalar root or a list of (tensor, seed_grad) pairs.
    Grads inside the touched subgraph are reset first, so repeated calls
    on the same graph do not double-count.
    """
    if isinstance(roots, Tensor):
        roots = [(roots, None)]
    order = _topo_order([t for t, _ in roots])
    for node in order:
        node.grad = None
    for t, g in roots:
        t.add_grad(np.ones_like(t.value) if g is None else np.asarray(g, dtype=np.float64))
    for node in reversed(order):
        if node.bwd is not None and node.grad is not None:
            node.bwd(node.grad)


def _op(value, parents, bwd) -> Tensor:
    if not any(p.needs_grad for p in parents):
        return Tensor(value)
    return Tensor(value, parents=tuple(parents), bwd=bwd)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    out = x.value @ w.value + b.value

    def bwd(g):
        if x.needs_grad:
            x.add_grad(g @ w.value.T)
        if w.needs_grad:
            w.add_grad(x.value.T @ g)
        if b.needs_grad:
            b.add_grad(g.sum(axis=0))

    return _op(out, (x, w, b), bwd)


def relu(x: Tensor) -> Tensor:
    mask = x.value > 0

    def bwd(g):
        x.add_grad(g * mask)

    return _op(x.value * mask, (x,), bwd)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.value)

    def bwd(g):
        x.add_grad(g * (1.0 - out * out))

    return _op(out, (x,), bwd)


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.value)

    def bwd(g):
        x.add_grad(g * out)

    return _op(out, (x,), bwd)


def log(x: Tensor) -> Tensor:
    def bwd(g):
        x.add_grad(g / x.value)

    return _op(np.log(x.value), (x,), bwd)


def neg(x: Tensor) -> Tensor:
    def bwd(g):
        x.add_grad(-g)

    return _op(-x.value, (x,), bwd)


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b)

    def bwd(g):
        if a.needs_grad:
            a.add_grad(g)
        if b.needs_grad:
            b.add_grad(g)

    return _op(a.value + b.value, (a, b), bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b)

    def bwd(g):
        if a.needs_grad:
            a.add_grad(g)
        if b.needs_grad:
            b.add_grad(-g)

    return _op(a.value - b.value, (a, b), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b)

    def bwd(g):
        if a.needs_grad:
            a.add_grad(g * b.value)
        if b.needs_grad:
            b.add_grad(g * a.value)

    return _op(a.value * b.value, (a, b), bwd)


def mul_const(x: Tensor, c: float) -> Tensor:
    def bwd(g):
        x.add_grad(g * c)

    return _op(x.value * c, (x,), bwd)


def add_const(x: Tensor, c) -> Tensor:
    def bwd(g):
        x.add_grad(g)

    return _op(x.value + c, (x,), bwd)


def pow_const(x: Tensor, p: float) -> Tensor:
    out = x.value**p

    def bwd(g):
        x.add_grad(g * p * x.value ** (p - 1.0))

    return _op(out, (x,), bwd)


def concat(parts: list[Tensor], axis: int = 1) -> Tensor:
    sizes = [p.value.shape[axis] for p in parts]
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    def bwd(g):
        for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if part.needs_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                part.add_grad(g[tuple(idx)])

    return _op(np.concatenate([p.value for p in parts], axis=axis), tuple(parts), bwd)


def reshape(x: Tensor, shape) -> Tensor:
    old = x.value.shape

    def bwd(g):
        x.add_grad(g.reshape(old))

    return _op(x.value.reshape(shape), (x,), bwd)


def softmax(x: Tensor) -> Tensor:
    z = x.value - x.value.max(axis=-1, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        x.add_grad(out * (g - dot))

    return _op(out, (x,), bwd)


def log_softmax(x: Tensor) -> Tensor:
    z = x.value - x.value.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    out = z - lse
    p = np.exp(out)

    def bwd(g):
        x.add_grad(g - p * g.sum(axis=-1, keepdims=True))

    return _op(out, (x,), bwd)


def pick(x: Tensor, idx: np.ndarray) -> Tensor:
    """Select x[..., idx] along the last axis; idx shape = x.shape[:-1]."""
    idx = np.asarray(idx, dtype=np.int64)
    out = np.take_along_axis(x.value, idx[..., None], axis=-1)[..., 0]

    def bwd(g):
        gx = np.zeros_like(x.value)
        np.put_along_axis(gx, idx[..., None], g[..., None], axis=-1)
        x.add_grad(gx)

    return _op(out, (x,), bwd)


def sum_last(x: Tensor) -> Tensor:
    def bwd(g):
        x.add_grad(np.broadcast_to(g[..., None], x.value.shape).copy())

    return _op(x.value.sum(axis=-1), (x,), bwd)


def mean_all(x: Tensor) -> Tensor:
    n = x.value.size

    def bwd(g):
        x.add_grad(np.full(x.value.shape, float(g) / n))

    return _op(x.value.mean(), (x,), bwd)


def minimum(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b)
    take_a = a.value <= b.value

    def bwd(g):
        if a.needs_grad:
            a.add_grad(g * take_a)
        if b.needs_grad:
            b.add_grad(g * ~take_a)

    return _op(np.minimum(a.value, b.value), (a, b), bwd)


def maximum(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b)
    take_a = a.value >= b.value

    def bwd(g):
        if a.needs_grad:
            a.add_grad(g * take_a)
        if b.needs_grad:
            b.add_grad(g * ~take_a)

    return _op(np.maximum(a.value, b.value), (a, b), bwd)


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    inside = (x.value > lo) & (x.value < hi)

    def bwd(g):
        x.add_grad(g * inside)

    return _op(np.clip(x.value, lo, hi), (x,), bwd)


def where(mask: np.ndarray, a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b)
    mask = np.asarray(mask, dtype=bool)

    def bwd(g):
        if a.needs_grad:
            a.add_grad(g * mask)
        if b.needs_grad:
            b.add_grad(g * ~mask)

    return _op(np.where(mask, a.value, b.value), (a, b), bwd)


def attention_pool(q: Tensor, kv: Tensor) -> Tensor:
    """Scaled dot-product attention with shared keys/values.

    q: (B, d); kv: (B, S, d).  Returns (B, d).
    """
    d = q.value.shape[-1]
    scale = 1.0 / np.sqrt(d)
    scores = np.einsum("be,bse->bs", q.value, kv.value) * scale
    z = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(z)
    w = e / e.sum(axis=-1, keepdims=True)
    out = np.einsum("bs,bse->be", w, kv.value)

    def bwd(g):
        dw = np.einsum("be,bse->bs", g, kv.value)
        ds = w * (dw - (dw * w).sum(axis=-1, keepdims=True))
        if q.needs_grad:
            q.add_grad(np.einsum("bs,bse->be", ds, kv.value) * scale)
        if kv.needs_grad:
            gkv = w[:, :, None] * g[:, None, :]
            gkv += ds[:, :, None] * q.value[:, None, :] * scale
            kv.add_grad(gkv)

    return _op(out, (q, kv), bwd)


def _same_shape(a: Tensor, b: Tensor) -> None:
    if a.value.shape != b.value.shape:
        raise ShapeError(f"shape mismatch: {a.value.shape} vs {b.value.shape}")


# ---------------------------------------------------------------------------
# Network specification and parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttentionSpec:
    """Input layout: [n_slots * slot_width | query_width | stats (rest)]."""

    n_slots: int
    slot_width: int
    query_width: int
    embed_width: int
    unit_hidden: tuple[int, ...] = ()
    query_hidden: tuple[int, ...] = ()
    stats_hidden: tuple[int, ...] = ()


@dataclass(frozen=True)
class NetSpec:
    input_width: int
    hidden: tuple[int, ...]
    heads: tuple[tuple[str, int], ...]
    activation: str = "relu"
    attention: AttentionSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))
        heads = tuple((str(n), int(w)) for n, w in (
            self.heads.items() if isinstance(self.heads, dict) else self.heads
        ))
        object.__setattr__(self, "heads", heads)
        names = [n for n, _ in heads]
        if len(set(names)) != len(names):
            raise ShapeError(f"duplicate head names: {names}")
        for _, w in heads:
            if w <= 0:
                raise ShapeError("head widths must be positive")
        if self.activation not in ("relu", "tanh"):
            raise ShapeError(f"unknown activation {self.activation!r}")
        if self.attention is not None and self.stats_width < 0:
            raise ShapeError("attention slots + query exceed the input width")

    @property
    def stats_width(self) -> int:
        att = self.attention
        return self.input_width - att.n_slots * att.slot_width - att.query_width

    @property
    def head_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.heads)

    def head_width(self, name: str) -> int:
        return dict(self.heads)[name]

    def to_dict(self) -> dict:
        d = {
            "input_width": self.input_width,
            "hidden": list(self.hidden),
            "heads": [[n, w] for n, w in self.heads],
            "activation": self.activation,
        }
        if self.attention is not None:
            a = self.attention
            d["attention"] = {
                "n_slots": a.n_slots,
                "slot_width": a.slot_width,
                "query_width": a.query_width,
                "embed_width": a.embed_width,
                "unit_hidden": list(a.unit_hidden),
                "query_hidden": list(a.query_hidden),
                "stats_hidden": list(a.stats_hidden),
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetSpec":
        att = None
        if d.get("attention"):
            a = d["attention"]
            att = AttentionSpec(
                n_slots=a["n_slots"],
                slot_width=a["slot_width"],
                query_width=a["query_width"],
                embed_width=a["embed_width"],
                unit_hidden=tuple(a["unit_hidden"]),
                query_hidden=tuple(a["query_hidden"]),
                stats_hidden=tuple(a["stats_hidden"]),
            )
        return cls(
            input_width=d["input_width"],
            hidden=tuple(d["hidden"]),
            heads=tuple((n, w) for n, w in d["heads"]),
            activation=d["activation"],
            attention=att,
        )

    def spec_hash(self) -> int:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")

    def layer_dims(self) -> list[tuple[str, int, int]]:
        """Ordered (name, fan_in, fan_out) for every weight matrix."""
        layers = []
        if self.attention is not None:
            att = self.attention
            dims = [att.slot_width, *att.unit_hidden, att.embed_width]
            layers += [("unit", a, b) for a, b in zip(dims[:-1], dims[1:])]
            dims = [att.query_width, *att.query_hidden, att.embed_width]
            layers += [("query", a, b) for a, b in zip(dims[:-1], dims[1:])]
            dims = [self.stats_width, *att.stats_hidden]
            layers += [("stats", a, b) for a, b in zip(dims[:-1], dims[1:])]
            trunk_in = att.embed_width + dims[-1]
        else:
            trunk_in = self.input_width
        dims = [trunk_in, *self.hidden]
        layers += [("trunk", a, b) for a, b in zip(dims[:-1], dims[1:])]
        for name, w in self.heads:
            layers.append((f"head:{name}", dims[-1], w))
        return [(f"{kind}{i}", a, b) for i, (kind, a, b) in enumerate(layers)]

    def param_count(self) -> int:
        return sum(a * b + b for _, a, b in self.layer_dims())


@dataclass
class NetParams:
    values: np.ndarray  # flat float64 vector
    offsets: dict[str, tuple[int, tuple[int, ...]]] = field(repr=False, default_factory=dict)

    def slice(self, name: str) -> np.ndarray:
        off, shape = self.offsets[name]
        return self.values[off : off + int(np.prod(shape))].reshape(shape)

    def copy(self) -> "NetParams":
        return NetParams(self.values.copy(), self.offsets)


def _build_offsets(spec: NetSpec) -> dict[str, tuple[int, tuple[int, ...]]]:
    offsets = {}
    cursor = 0
    for name, a, b in spec.layer_dims():
        offsets[f"{name}.w"] = (cursor, (a, b))
        cursor += a * b
        offsets[f"{name}.b"] = (cursor, (b,))
        cursor += b
    return offsets


def init_params(spec: NetSpec, seed: int) -> NetParams:
    """Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases."""
    rng = np.random.default_rng(seed)
    values = np.zeros(spec.param_count(), dtype=np.float64)
    params = NetParams(values, _build_offsets(spec))
    for name, a, b in spec.layer_dims():
        bound = np.sqrt(6.0 / (a + b))
        params.slice(f"{name}.w")[:] = rng.uniform(-bound, bound, size=(a, b))
    return params


def zero_params(spec: NetSpec) -> NetParams:
    return NetParams(np.zeros(spec.param_count(), dtype=np.float64), _build_offsets(spec))


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------


@dataclass
class Cache:
    spec: NetSpec
    param_leaves: dict[str, Tensor]
    head_tensors: dict[str, Tensor]
    n_params: int

    def head(self, name: str) -> Tensor:
        return self.head_tensors[name]


def forward(spec: NetSpec, params: NetParams, inputs: np.ndarray) -> tuple[dict[str, np.ndarray], Cache]:
    """Run the network on a (batch, input_width) matrix.

    Returns head outputs and a cache sufficient for backward.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.input_width:
        raise ShapeError(f"input must be (batch, {spec.input_width}), got {x.shape}")
    if params.values.shape[0] != spec.param_count():
        raise ShapeError(
            f"params length {params.values.shape[0]} != spec count {spec.param_count()}"
        )

    act = relu if spec.activation == "relu" else tanh
    leaves = {name: leaf(params.slice(name)) for name in params.offsets}

    def mlp(h: Tensor, prefix: str, indices: list[int]) -> Tensor:
        for i in indices:
            h = act(linear(h, leaves[f"{prefix}{i}.w"], leaves[f"{prefix}{i}.b"]))
        return h

    layer_names = [name for name, _, _ in spec.layer_dims()]
    by_kind: dict[str, list[int]] = {}
    for i, name in enumerate(layer_names):
        kind = name.rstrip("0123456789")
        by_kind.setdefault(kind, []).append(i)

    def run_path(h: Tensor, kind: str) -> Tensor:
        for i in by_kind.get(kind, []):
            h = act(linear(h, leaves[f"{kind}{i}.w"], leaves[f"{kind}{i}.b"]))
        return h

    batch = x.shape[0]
    if spec.attention is not None:
        att = spec.attention
        n_slot_feats = att.n_slots * att.slot_width
        slots = const(x[:, :n_slot_feats].reshape(batch * att.n_slots, att.slot_width))
        query_in = const(x[:, n_slot_feats : n_slot_feats + att.query_width])
        units = run_path(slots, "unit")
        units = reshape(units, (batch, att.n_slots, att.embed_width))
        query = run_path(query_in, "query")
        pooled = attention_pool(query, units)
        if spec.stats_width > 0 and att.stats_hidden:
            stats = run_path(const(x[:, n_slot_feats + att.query_width :]), "stats")
            h = concat([pooled, stats], axis=1)
        elif spec.stats_width > 0:
            h = concat([pooled, const(x[:, n_slot_feats + att.query_width :])], axis=1)
        else:
            h = pooled
    else:
        h = const(x)
    h = run_path(h, "trunk")

    heads = {}
    # Head layer names carry their index suffix; recover them from spec order.
    head_layer_names = [n for n in layer_names if n.startswith("head:")]
    for (head_name, _w), lname in zip(spec.heads, head_layer_names):
        heads[head_name] = linear(h, leaves[f"{lname}.w"], leaves[f"{lname}.b"])

    cache = Cache(
        spec=spec,
        param_leaves=leaves,
        head_tensors=heads,
        n_params=params.values.shape[0],
    )
    return {name: t.value for name, t in heads.items()}, cache


def collect_grad(cache: Cache, offsets: dict[str, tuple[int, tuple[int, ...]]]) -> np.ndarray:
    grad = np.zeros(cache.n_params, dtype=np.float64)
    for name, t in cache.param_leaves.items():
        if t.grad is not None:
            off, shape = offsets[name]
            grad[off : off + int(np.prod(shape))] = t.grad.ravel()
    return grad


def backward(
    spec: NetSpec,
    params: NetParams,
    cache: Cache,
    head_grads: dict[str, np.ndarray],
) -> np.ndarray:
    """Gradient of sum(head * head_grad) w.r.t. the flat parameter vector."""
    if cache.spec is not spec and cache.spec != spec:
        raise DataError("cache does not belong to this spec")
    roots = []
    for name, g in head_grads.items():
        t = cache.head_tensors[name]
        g = np.asarray(g, dtype=np.float64)
        if g.shape != t.value.shape:
            raise ShapeError(f"head {name!r} grad shape {g.shape} != {t.value.shape}")
        roots.append((t, g))
    run_backward(roots)
    return collect_grad(cache, params.offsets)


def grad_from_scalar(loss: Tensor, cache: Cache, params: NetParams) -> np.ndarray:
    """Gradient of a composed scalar loss w.r.t. the flat parameters."""
    if loss.value.shape != ():
        raise ShapeError(f"loss must be scalar, got shape {loss.value.shape}")
    run_backward(loss)
    return collect_grad(cache, params.offsets)


# ---------------------------------------------------------------------------
# Losses, attention (plain numpy surfaces)
# ---------------------------------------------------------------------------


def focal_loss(probs: np.ndarray, label: int, alpha: float, gamma: float) -> float:
    """-alpha * (1 - p[label])^gamma * log(p[label]) for one distribution."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1:
        raise ShapeError("probs must be a 1-D distribution")
    if not np.isclose(probs.sum(), 1.0, atol=1e-6):
        raise ShapeError(f"probs must sum to 1, got {probs.sum()}")
    if not 0 <= label < probs.shape[0]:
        raise IndexError(f"label {label} out of range for {probs.shape[0]} classes")
    p = probs[label]
    return float(-alpha * (1.0 - p) ** gamma * np.log(p))


def attention(query: np.ndarray, keys, values) -> np.ndarray:
    """softmax(q . k_i / sqrt(d)) weighted sum of the value vectors."""
    keys = np.asarray(keys, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    if keys.ndim != 2 or keys.shape[0] == 0:
        raise ShapeError("keys must be a non-empty list of vectors")
    if values.shape[0] != keys.shape[0]:
        raise ShapeError("keys and values must have the same slot count")
    if query.shape != (keys.shape[1],):
        raise ShapeError("query width must match key width")
    scores = keys @ query / np.sqrt(keys.shape[1])
    scores -= scores.max()
    w = np.exp(scores)
    w /= w.sum()
    return w @ values


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: NetParams, lr: float = 1e-4) -> "AdamState":
        n = params.values.shape[0]
        return cls(m=np.zeros(n), v=np.zeros(n), lr=lr)


def adam_step(params: NetParams, grads: np.ndarray, state: AdamState) -> tuple[NetParams, AdamState]:
    """Standard bias-corrected Adam update, applied in place."""
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.values.shape:
        raise ShapeError(f"grad shape {grads.shape} != params {params.values.shape}")
    if not np.all(np.isfinite(grads)):
        raise NumericError("non-finite gradient; training aborted")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    params.values -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

_MAGIC = b"MMNET1\x00\x00"


def save_checkpoint(path: str | Path, spec: NetSpec, params: NetParams, extra: dict | None = None) -> None:
    """Binary little-endian blob + JSON sidecar describing the spec."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<QQ", spec.spec_hash(), params.values.shape[0]))
        fh.write(params.values.astype("<f8").tobytes())
    sidecar = {"spec": spec.to_dict(), "extra": extra or {}}
    with open(path.with_suffix(path.suffix + ".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> tuple[NetSpec, NetParams, dict]:
    path = Path(path)
    with open(path.with_suffix(path.suffix + ".json")) as fh:
        sidecar = json.load(fh)
    spec = NetSpec.from_dict(sidecar["spec"])
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise DataError(f"{path}: not a checkpoint file")
        spec_hash, count = struct.unpack("<QQ", fh.read(16))
        if spec_hash != spec.spec_hash():
            raise DataError(f"{path}: sidecar spec does not match checkpoint hash")
        if count != spec.param_count():
            raise DataError(f"{path}: parameter count {count} != spec {spec.param_count()}")
        values = np.frombuffer(fh.read(count * 8), dtype="<f8").astype(np.float64)
    params = NetParams(values, _build_offsets(spec))
    return spec, params, sidecar.get("extra", {})
