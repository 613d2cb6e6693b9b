"""Minimal dense reverse-mode autodiff for the parser's fixed computation graph.

All math is float64. A Tape records primitive operations in execution order;
backward() replays it in reverse, accumulating gradients into Parameters.
Not a general-purpose autodiff: only the primitives the encoder, scorers and
tagging heads need.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

__all__ = [
    "Parameter", "Node", "Tape", "forward_affine", "forward_biaffine",
    "gelu", "elu", "relu", "identity", "ACTIVATIONS",
]


class Parameter:
    """A named trainable array with a same-shape gradient accumulator."""

    def __init__(self, values: np.ndarray, name: str):
        self.values = np.asarray(values, dtype=np.float64)
        self.gradient = np.zeros_like(self.values)
        self.name = name

    def zero_grad(self) -> None:
        self.gradient.fill(0.0)

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.values.shape})"


class Node:
    """One value in the computation graph."""

    __slots__ = ("value", "grad", "_backward")

    def __init__(self, value: np.ndarray, backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape


# Activations: value function and derivative (as a function of the input).
_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu(x):
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def _gelu_grad(x):
    cdf = 0.5 * (1.0 + erf(x / _SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return cdf + x * pdf


def elu(x):
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def _elu_grad(x):
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def relu(x):
    return np.maximum(x, 0.0)


def _relu_grad(x):
    return (x > 0).astype(np.float64)


def identity(x):
    return x


def _identity_grad(x):
    return np.ones_like(x)


ACTIVATIONS = {
    "gelu": (gelu, _gelu_grad),
    "elu": (elu, _elu_grad),
    "relu": (relu, _relu_grad),
    "identity": (identity, _identity_grad),
}


class Tape:
    """Ordered record of operations for one forward/backward pass."""

    def __init__(self):
        self.nodes: list[Node] = []
        self._grads_of: list[tuple] = []  # parallel bookkeeping kept inside closures

    def _record(self, value, backward) -> Node:
        node = Node(value, backward)
        self.nodes.append(node)
        return node

    # -- leaves ------------------------------------------------------------

    def param(self, p: Parameter) -> Node:
        def backward(node):
            p.gradient += node.grad
        return self._record(p.values, backward)

    def const(self, value) -> Node:
        return self._record(value, None)

    # -- elementwise and linear ---------------------------------------------

    def add(self, a: Node, b: Node) -> Node:
        def backward(node):
            _accum(a, _unbroadcast(node.grad, a.value.shape))
            _accum(b, _unbroadcast(node.grad, b.value.shape))
        return self._record(a.value + b.value, backward)

    def mul(self, a: Node, b: Node) -> Node:
        def backward(node):
            _accum(a, _unbroadcast(node.grad * b.value, a.value.shape))
            _accum(b, _unbroadcast(node.grad * a.value, b.value.shape))
        return self._record(a.value * b.value, backward)

    def scale(self, a: Node, c: float) -> Node:
        def backward(node):
            _accum(a, c * node.grad)
        return self._record(c * a.value, backward)

    def mul_const(self, a: Node, c: np.ndarray) -> Node:
        """Multiply by a fixed array (e.g. a dropout mask)."""
        c = np.asarray(c, dtype=np.float64)

        def backward(node):
            _accum(a, _unbroadcast(node.grad * c, a.value.shape))
        return self._record(a.value * c, backward)

    def add_const(self, a: Node, c: np.ndarray) -> Node:
        def backward(node):
            _accum(a, _unbroadcast(node.grad, a.value.shape))
        return self._record(a.value + np.asarray(c, dtype=np.float64), backward)

    def matmul(self, a: Node, b: Node) -> Node:
        av, bv = a.value, b.value
        if av.ndim == 1 and bv.ndim == 2:
            def backward(node):
                _accum(a, node.grad @ bv.T)
                _accum(b, np.outer(av, node.grad))
            return self._record(av @ bv, backward)
        if av.ndim == 2 and bv.ndim == 1:
            def backward(node):
                _accum(a, np.outer(node.grad, bv))
                _accum(b, av.T @ node.grad)
            return self._record(av @ bv, backward)
        if av.ndim == 2 and bv.ndim == 2:
            def backward(node):
                _accum(a, node.grad @ bv.T)
                _accum(b, av.T @ node.grad)
            return self._record(av @ bv, backward)
        raise ValueError(f"matmul: unsupported ranks {av.ndim} x {bv.ndim}")

    def affine(self, x: Node, w: Node, b: Node) -> Node:
        """x @ w.T + b for x of shape (n, d) or (d,); w is (out, d)."""
        xv, wv = x.value, w.value
        if xv.ndim == 1:
            if wv.shape[1] != xv.shape[0]:
                raise ValueError(f"affine: W {wv.shape} incompatible with x {xv.shape}")

            def backward(node):
                _accum(x, node.grad @ wv)
                _accum(w, np.outer(node.grad, xv))
                _accum(b, node.grad)
            return self._record(wv @ xv + b.value, backward)
        if wv.shape[1] != xv.shape[1]:
            raise ValueError(f"affine: W {wv.shape} incompatible with x {xv.shape}")

        def backward(node):
            _accum(x, node.grad @ wv)
            _accum(w, node.grad.T @ xv)
            _accum(b, node.grad.sum(axis=0))
        return self._record(xv @ wv.T + b.value, backward)

    def activation(self, x: Node, kind: str) -> Node:
        fn, grad_fn = ACTIVATIONS[kind]
        xv = x.value

        def backward(node):
            _accum(x, node.grad * grad_fn(xv))
        return self._record(fn(xv), backward)

    def concat(self, a: Node, b: Node) -> Node:
        na = a.value.shape[-1]

        def backward(node):
            _accum(a, node.grad[..., :na])
            _accum(b, node.grad[..., na:])
        return self._record(np.concatenate([a.value, b.value], axis=-1), backward)

    def vstack(self, a: Node, b: Node) -> Node:
        """Stack a (1-D row or 2-D block) on top of b (2-D)."""
        av = a.value if a.value.ndim == 2 else a.value[None, :]
        rows_a = av.shape[0]

        def backward(node):
            ga = node.grad[:rows_a]
            _accum(a, ga if a.value.ndim == 2 else ga[0])
            _accum(b, node.grad[rows_a:])
        return self._record(np.vstack([av, b.value]), backward)

    def rows(self, x: Node, index: np.ndarray) -> Node:
        """Gather rows of a 2-D array (embedding lookup); scatter-add on backward."""
        index = np.asarray(index, dtype=np.intp)

        def backward(node):
            g = np.zeros_like(x.value)
            np.add.at(g, index, node.grad)
            _accum(x, g)
        return self._record(x.value[index], backward)

    def replace_rows(self, x: Node, mask: np.ndarray, v: Node) -> Node:
        """Rows of x where mask is True are replaced by the vector v."""
        mask = np.asarray(mask, dtype=bool)
        out = x.value.copy()
        out[mask] = v.value

        def backward(node):
            gx = node.grad.copy()
            gx[mask] = 0.0
            _accum(x, gx)
            _accum(v, node.grad[mask].sum(axis=0))
        return self._record(out, backward)

    # -- biaffine -------------------------------------------------------------

    def bilinear(self, x1: Node, u: Node, x2: Node) -> Node:
        """k-vector with entries x1ᵀ U[:, c, :] x2 for U of shape (d1, k, d2)."""
        x1v, uv, x2v = x1.value, u.value, x2.value
        if uv.shape[0] != x1v.shape[-1] or uv.shape[2] != x2v.shape[-1]:
            raise ValueError(f"bilinear: U {uv.shape} incompatible with {x1v.shape}, {x2v.shape}")

        def backward(node):
            _accum(x1, np.einsum("k,akb,b->a", node.grad, uv, x2v))
            _accum(u, np.einsum("a,k,b->akb", x1v, node.grad, x2v))
            _accum(x2, np.einsum("a,akb,k->b", x1v, uv, node.grad))
        return self._record(np.einsum("a,akb,b->k", x1v, uv, x2v), backward)

    def biaffine_all_pairs(self, hh: Node, hd: Node, u: Node, w: Node, b: Node) -> Node:
        """Scores for all (head, dependent) pairs.

        hh: (m, a) head representations; hd: (n, a) dependent representations;
        u: (a, k, a); w: (k, 2a); b: (k,). Returns (m, n, k) with
        out[i, j] = hh[i]ᵀ U hd[j] + W (hh[i] ⊕ hd[j]) + b.
        """
        hhv, hdv, uv, wv, bv = hh.value, hd.value, u.value, w.value, b.value
        a = hhv.shape[1]
        if uv.shape != (a, wv.shape[0], hdv.shape[1]) or wv.shape[1] != a + hdv.shape[1]:
            raise ValueError(
                f"biaffine: shapes U{uv.shape} W{wv.shape} incompatible with "
                f"heads {hhv.shape}, deps {hdv.shape}")
        w1, w2 = wv[:, :a], wv[:, a:]
        out = np.einsum("ia,akb,jb->ijk", hhv, uv, hdv)
        out += (hhv @ w1.T)[:, None, :]
        out += (hdv @ w2.T)[None, :, :]
        out += bv

        def backward(node):
            g = node.grad
            _accum(hh, np.einsum("ijk,akb,jb->ia", g, uv, hdv)
                   + np.einsum("ijk,ka->ia", g, w1))
            _accum(hd, np.einsum("ia,akb,ijk->jb", hhv, uv, g)
                   + np.einsum("ijk,ka->ja", g, w2))
            _accum(u, np.einsum("ia,ijk,jb->akb", hhv, g, hdv))
            gw1 = np.einsum("ijk,ia->ka", g, hhv)
            gw2 = np.einsum("ijk,ja->ka", g, hdv)
            _accum(w, np.concatenate([gw1, gw2], axis=1))
            _accum(b, g.sum(axis=(0, 1)))
        return self._record(out, backward)

    # -- mixing and normalization ---------------------------------------------

    def scalar_mix(self, layers: np.ndarray, logits: Node,
                   active: np.ndarray | None = None) -> Node:
        """Softmax-weighted sum of fixed layer stacks.

        layers: (L, n, d) constant array; logits: (L,) node; active: boolean
        mask of layers that survive layer dropout (None = all active).
        """
        layers = np.asarray(layers, dtype=np.float64)
        lv = logits.value
        if active is None:
            active = np.ones(lv.shape[0], dtype=bool)
        masked = np.where(active, lv, -np.inf)
        z = masked - masked.max()
        expz = np.exp(z)
        weights = expz / expz.sum()

        def backward(node):
            # d out / d w_l = layers[l]; chain through softmax of active logits.
            per_layer = np.einsum("lnd,nd->l", layers, node.grad)
            glogits = weights * (per_layer - np.dot(weights, per_layer))
            _accum(logits, glogits)
        return self._record(np.einsum("l,lnd->nd", weights, layers), backward)

    def softmax_cross_entropy(self, logits: Node, targets: np.ndarray,
                              mask: np.ndarray | None = None) -> Node:
        """Mean cross-entropy over rows.

        logits: (n, k); targets: (n,) int class ids; mask: optional (n, k)
        boolean of admissible classes (inadmissible entries play no part).
        """
        lv = logits.value
        targets = np.asarray(targets, dtype=np.intp)
        n = lv.shape[0]
        if n == 0:
            return self.const(0.0)
        work = lv if mask is None else np.where(mask, lv, -np.inf)
        mx = work.max(axis=1, keepdims=True)
        expw = np.exp(work - mx)
        sumexp = expw.sum(axis=1, keepdims=True)
        logz = mx[:, 0] + np.log(sumexp[:, 0])
        losses = logz - work[np.arange(n), targets]

        def backward(node):
            probs = expw / sumexp
            probs[np.arange(n), targets] -= 1.0
            _accum(logits, probs * (node.grad / n))
        return self._record(losses.mean(), backward)

    def sigmoid_cross_entropy(self, logits: Node, targets: np.ndarray,
                              mask: np.ndarray | None = None) -> Node:
        """Mean binary cross-entropy with logits over entries where mask is True."""
        lv = logits.value
        targets = np.asarray(targets, dtype=np.float64)
        if mask is None:
            mask = np.ones(lv.shape, dtype=bool)
        count = int(mask.sum())
        if count == 0:
            return self.const(0.0)
        # log(1 + e^x) computed stably.
        softplus = np.logaddexp(0.0, lv)
        losses = softplus - targets * lv

        def backward(node):
            sig = 1.0 / (1.0 + np.exp(-lv))
            g = (sig - targets) * mask / count
            _accum(logits, g * node.grad)
        return self._record(float(losses[mask].sum() / count), backward)

    def gather_cells(self, scores: Node, cells: np.ndarray) -> Node:
        """Select rows scores[i, j, :] for each (i, j) in cells; result (m, k)."""
        cells = np.asarray(cells, dtype=np.intp).reshape(-1, 2)
        ii, jj = cells[:, 0], cells[:, 1]

        def backward(node):
            g = np.zeros_like(scores.value)
            np.add.at(g, (ii, jj), node.grad)
            _accum(scores, g)
        return self._record(scores.value[ii, jj], backward)

    def transpose(self, x: Node, axes: tuple[int, ...]) -> Node:
        inverse = np.argsort(axes)

        def backward(node):
            _accum(x, node.grad.transpose(inverse))
        return self._record(x.value.transpose(axes), backward)

    def reshape(self, x: Node, shape) -> Node:
        old = x.value.shape

        def backward(node):
            _accum(x, node.grad.reshape(old))
        return self._record(x.value.reshape(shape), backward)

    def sum(self, x: Node) -> Node:
        def backward(node):
            _accum(x, np.full_like(x.value, float(node.grad)))
        return self._record(x.value.sum(), backward)

    def mean(self, x: Node) -> Node:
        size = x.value.size

        def backward(node):
            _accum(x, np.full_like(x.value, float(node.grad) / size))
        return self._record(x.value.mean(), backward)

    def add_scaled(self, terms: list[tuple[float, Node]]) -> Node:
        """Weighted sum of scalar nodes: sum(c * t)."""
        def backward(node):
            for c, t in terms:
                _accum(t, c * node.grad)
        return self._record(sum(c * float(t.value) for c, t in terms), backward)

    # -- backward pass ---------------------------------------------------------

    def backward(self, loss: Node, seed: float = 1.0) -> None:
        if loss.value.ndim != 0:
            raise ValueError("backward requires a scalar loss node")
        if not np.isfinite(loss.value):
            raise FloatingPointError("non-finite loss")
        for node in self.nodes:
            node.grad = np.zeros_like(node.value)
        loss.grad = np.asarray(seed, dtype=np.float64)
        for node in reversed(self.nodes):
            if node._backward is not None and np.any(node.grad):
                node._backward(node)


def _accum(node: Node, grad: np.ndarray) -> None:
    node.grad += grad


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def forward_affine(tape: Tape, x: Node, w: Node, b: Node,
                   activation: str = "gelu") -> Node:
    """Single-layer feedforward: activation(W x + b)."""
    return tape.activation(tape.affine(x, w, b), activation)


def forward_biaffine(tape: Tape, x1: Node, x2: Node, u: Node, w: Node, b: Node) -> Node:
    """x1ᵀ U x2 + W (x1 ⊕ x2) + b for single vectors x1 (d1,), x2 (d2,)."""
    bilinear = tape.bilinear(x1, u, x2)
    linear = tape.affine(tape.concat(x1, x2), w, b)
    return tape.add(bilinear, linear)
