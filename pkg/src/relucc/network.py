"""Layered networks with exact rational weights.

A :class:`Network` is a list of :class:`Layer` objects. Each layer holds a
weight matrix (one row per neuron), a bias vector and an optional
:class:`Activation`; ``None`` means the layer is linear. Size counts every
neuron including the outputs and depth counts every layer, so a network with
one ReLU layer and a linear output has depth 2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .exactnum import DomainError, format_fraction, fractions, to_fraction

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class Activation:
    """Piecewise-linear activation with ``k = len(breakpoints) + 1`` pieces.

    Piece 0 covers ``z <= c_1``, piece ``i`` covers ``c_i < z <= c_{i+1}`` and
    the last piece covers ``z > c_{k-1}``. ReLU and Sign are the two-piece
    instances with a breakpoint at 0.
    """

    kind: str
    breakpoints: tuple[Fraction, ...]
    slopes: tuple[Fraction, ...]
    intercepts: tuple[Fraction, ...]

    def __post_init__(self):
        k = len(self.breakpoints) + 1
        if len(self.slopes) != k or len(self.intercepts) != k:
            raise DomainError(f"{k} pieces need {k} slopes and intercepts")
        if any(a >= b for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        if self.kind not in ("relu", "sign", "pwl"):
            raise DomainError(f"unknown activation kind {self.kind!r}")

    @property
    def pieces(self) -> int:
        return len(self.breakpoints) + 1

    def piece(self, z: Fraction) -> int:
        # left-open, right-closed intervals
        lo, hi = 0, len(self.breakpoints)
        while lo < hi:
            mid = (lo + hi) // 2
            if z > self.breakpoints[mid]:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def apply(self, z: Fraction) -> Fraction:
        i = self.piece(z)
        return self.slopes[i] * z + self.intercepts[i]

    def to_json(self) -> dict:
        if self.kind in ("relu", "sign"):
            return {"kind": self.kind}
        return {
            "kind": "pwl",
            "breakpoints": [format_fraction(c) for c in self.breakpoints],
            "slopes": [format_fraction(a) for a in self.slopes],
            "intercepts": [format_fraction(b) for b in self.intercepts],
        }

    @classmethod
    def from_json(cls, data) -> "Activation | None":
        if data is None:
            return None
        if isinstance(data, str):
            data = {"kind": data}
        kind = data["kind"]
        if kind == "relu":
            return RELU
        if kind == "sign":
            return SIGN
        if kind in ("linear", "none"):
            return None
        return piecewise_linear(data["breakpoints"], data["slopes"], data["intercepts"])


RELU = Activation("relu", (ZERO,), (ZERO, ONE), (ZERO, ZERO))
SIGN = Activation("sign", (ZERO,), (ZERO, ZERO), (ZERO, ONE))


def piecewise_linear(breakpoints, slopes, intercepts) -> Activation:
    return Activation("pwl", fractions(breakpoints), fractions(slopes), fractions(intercepts))


@dataclass(frozen=True)
class Layer:
    weights: tuple[tuple[Fraction, ...], ...]
    bias: tuple[Fraction, ...]
    activation: Activation | None = RELU

    @classmethod
    def make(cls, weights, bias, activation: Activation | None = RELU) -> "Layer":
        w = tuple(fractions(row) for row in weights)
        b = fractions(bias)
        if len(w) != len(b):
            raise DomainError(f"{len(w)} weight rows but {len(b)} biases")
        if w and len({len(row) for row in w}) != 1:
            raise DomainError("ragged weight matrix")
        return cls(w, b, activation)

    @property
    def width(self) -> int:
        return len(self.bias)

    @property
    def fan_in(self) -> int:
        return len(self.weights[0]) if self.weights else 0

    def preactivation(self, y: Sequence[Fraction]) -> list[Fraction]:
        return [sum((w * v for w, v in zip(row, y) if w), b) for row, b in zip(self.weights, self.bias)]

    def forward(self, y: Sequence[Fraction]) -> list[Fraction]:
        z = self.preactivation(y)
        if self.activation is None:
            return z
        act = self.activation
        return [act.apply(v) for v in z]


@dataclass(frozen=True)
class AffineForm:
    """``x -> <coefficients, x> + bias`` with exact rational coefficients."""

    coefficients: tuple[Fraction, ...]
    bias: Fraction = ZERO

    @classmethod
    def constant(cls, dim: int, value=ZERO) -> "AffineForm":
        return cls((ZERO,) * dim, to_fraction(value))

    @classmethod
    def coordinate(cls, dim: int, i: int) -> "AffineForm":
        return cls(tuple(ONE if j == i else ZERO for j in range(dim)), ZERO)

    def __call__(self, x: Sequence) -> Fraction:
        return sum((a * to_fraction(v) for a, v in zip(self.coefficients, x) if a), self.bias)

    def scale(self, s) -> "AffineForm":
        s = to_fraction(s)
        if s == 1:
            return self
        if s == 0:
            return AffineForm((ZERO,) * len(self.coefficients), ZERO)
        return AffineForm(tuple(a * s for a in self.coefficients), self.bias * s)

    def shift(self, t) -> "AffineForm":
        t = to_fraction(t)
        return AffineForm(self.coefficients, self.bias + t) if t else self

    def __add__(self, other: "AffineForm") -> "AffineForm":
        return AffineForm(tuple(a + b for a, b in zip(self.coefficients, other.coefficients)),
                          self.bias + other.bias)

    def is_zero(self) -> bool:
        return self.bias == 0 and not any(self.coefficients)


def combine(weights: Sequence[Fraction], forms: Sequence[AffineForm], bias: Fraction, dim: int) -> AffineForm:
    coeffs = [ZERO] * dim
    const = bias
    for w, f in zip(weights, forms):
        if not w:
            continue
        const += w * f.bias
        for j, a in enumerate(f.coefficients):
            if a:
                coeffs[j] += w * a
    return AffineForm(tuple(coeffs), const)


@dataclass(frozen=True)
class Network:
    input_dim: int
    layers: tuple[Layer, ...]
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not self.layers:
            raise DomainError("a network needs at least one layer")
        dim = self.input_dim
        for k, layer in enumerate(self.layers):
            if layer.width == 0:
                raise DomainError(f"layer {k} has no neurons")
            if layer.fan_in != dim:
                raise DomainError(f"layer {k} expects {layer.fan_in} inputs, previous width is {dim}")
            dim = layer.width

    @property
    def output_dim(self) -> int:
        return self.layers[-1].width

    @property
    def size(self) -> int:
        return sum(layer.width for layer in self.layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def width(self) -> int:
        return max(layer.width for layer in self.layers)

    @property
    def activated_neurons(self) -> int:
        return sum(layer.width for layer in self.layers if layer.activation is not None)

    def with_meta(self, **meta) -> "Network":
        merged = dict(self.meta)
        merged.update(meta)
        return Network(self.input_dim, self.layers, merged)

    def _check_input(self, x) -> list[Fraction]:
        if len(x) != self.input_dim:
            raise DomainError(f"expected {self.input_dim} inputs, got {len(x)}")
        return [to_fraction(v) for v in x]

    def evaluate(self, x: Sequence) -> tuple[Fraction, ...]:
        y = self._check_input(x)
        for layer in self.layers:
            y = layer.forward(y)
        return tuple(y)

    def __call__(self, x: Sequence) -> tuple[Fraction, ...]:
        return self.evaluate(x)

    def scalar(self, x: Sequence) -> Fraction:
        if self.output_dim != 1:
            raise DomainError("scalar() needs a single-output network")
        return self.evaluate(x)[0]

    def activation_pattern(self, x: Sequence) -> tuple[int, ...]:
        """Piece index of every neuron that carries an activation, layer by layer."""
        y = self._check_input(x)
        pattern: list[int] = []
        for layer in self.layers:
            z = layer.preactivation(y)
            if layer.activation is None:
                y = z
                continue
            act = layer.activation
            idx = [act.piece(v) for v in z]
            pattern.extend(idx)
            y = [act.slopes[i] * v + act.intercepts[i] for i, v in zip(idx, z)]
        return tuple(pattern)

    def collapse_to_affine(self, pattern: Sequence[int]) -> tuple[AffineForm, ...]:
        """Replace every activated neuron by the affine piece named in ``pattern``."""
        if len(pattern) != self.activated_neurons:
            raise DomainError(f"pattern has {len(pattern)} entries, network has "
                              f"{self.activated_neurons} activated neurons")
        d = self.input_dim
        forms = [AffineForm.coordinate(d, i) for i in range(d)]
        pos = 0
        for layer in self.layers:
            pre = [combine(row, forms, b, d) for row, b in zip(layer.weights, layer.bias)]
            if layer.activation is None:
                forms = pre
                continue
            act = layer.activation
            out = []
            for f in pre:
                i = pattern[pos]
                pos += 1
                if not 0 <= i < act.pieces:
                    raise DomainError(f"piece index {i} out of range")
                out.append(f.scale(act.slopes[i]).shift(act.intercepts[i]))
            forms = out
        return tuple(forms)

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "input_dim": self.input_dim,
            "layers": [
                {
                    "weights": [[format_fraction(w) for w in row] for row in layer.weights],
                    "bias": [format_fraction(b) for b in layer.bias],
                    "activation": layer.activation.to_json() if layer.activation else {"kind": "linear"},
                }
                for layer in self.layers
            ],
        }
        if self.meta:
            out["meta"] = dict(self.meta)
        return out

    def dumps(self, **kw) -> str:
        return json.dumps(self.to_json(), **kw)

    @classmethod
    def from_json(cls, data) -> "Network":
        if isinstance(data, str):
            data = json.loads(data)
        layers = tuple(
            Layer.make(l["weights"], l["bias"], Activation.from_json(l.get("activation")))
            for l in data["layers"]
        )
        return cls(int(data["input_dim"]), layers, dict(data.get("meta", {})))


def network(input_dim: int, layers: Iterable[Layer | tuple], **meta) -> Network:
    built = []
    for layer in layers:
        if isinstance(layer, Layer):
            built.append(layer)
        else:
            built.append(Layer.make(*layer))
    return Network(input_dim, tuple(built), meta)


def identity_network(dim: int) -> Network:
    rows = [[ONE if i == j else ZERO for j in range(dim)] for i in range(dim)]
    return network(dim, [(rows, [ZERO] * dim, None)], gadget="identity")


def _matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> tuple[tuple[Fraction, ...], ...]:
    cols = list(zip(*b))
    return tuple(tuple(sum((x * y for x, y in zip(row, col) if x and y), ZERO) for col in cols) for row in a)


def _merge(first: Layer, second: Layer) -> Layer:
    """Fold a linear layer into the layer that reads it."""
    assert first.activation is None
    w = _matmul(second.weights, first.weights)
    b = tuple(bias + sum((w2 * b1 for w2, b1 in zip(row, first.bias) if w2), ZERO)
              for row, bias in zip(second.weights, second.bias))
    return Layer(w, b, second.activation)


def compose(outer: Network, inner: Network) -> Network:
    """``x -> outer(inner(x))``; a linear last layer of ``inner`` is merged away."""
    if inner.output_dim != outer.input_dim:
        raise DomainError(f"inner emits {inner.output_dim} values, outer reads {outer.input_dim}")
    last = inner.layers[-1]
    if last.activation is None:
        layers = inner.layers[:-1] + (_merge(last, outer.layers[0]),) + outer.layers[1:]
    else:
        layers = inner.layers + outer.layers
    return Network(inner.input_dim, layers, {"composed": [inner.meta.get("gadget"), outer.meta.get("gadget")]})


def _identity_layer(dim: int, activation: Activation | None = None) -> Layer:
    rows = tuple(tuple(ONE if i == j else ZERO for j in range(dim)) for i in range(dim))
    return Layer(rows, (ZERO,) * dim, activation)


def _split_layer(layer: Layer) -> Layer:
    """ReLU pair ``[z]_+, [-z]_+`` of each pre-activation of a linear layer."""
    rows = layer.weights + tuple(tuple(-w for w in row) for row in layer.weights)
    bias = layer.bias + tuple(-b for b in layer.bias)
    return Layer(rows, bias, RELU)


def _join_layer(dim: int) -> Layer:
    """Linear ``(a, b) -> a - b``, undoing :func:`_split_layer`."""
    rows = tuple(tuple(ONE if j == i else (-ONE if j == i + dim else ZERO) for j in range(2 * dim))
                 for i in range(dim))
    return Layer(rows, (ZERO,) * dim, None)


def _pad(n: Network, depth: int) -> list[Layer]:
    """Extend ``n`` to ``depth`` layers exactly, using ``y = [y]_+ - [-y]_+`` and identity ReLUs."""
    layers = list(n.layers)
    gap = depth - len(layers)
    if gap <= 0:
        return layers
    q = n.output_dim
    if layers[-1].activation is None:
        layers[-1] = _split_layer(layers[-1])
        layers.extend(_identity_layer(2 * q, RELU) for _ in range(gap - 1))
    elif gap == 1:
        return layers + [_identity_layer(q)]
    else:
        layers.append(_split_layer(_identity_layer(q)))
        layers.extend(_identity_layer(2 * q, RELU) for _ in range(gap - 2))
    layers.append(_join_layer(q))
    return layers


def juxtapose(nets: Sequence[Network]) -> Network:
    """Run networks side by side on concatenated inputs.

    Shallower blocks are padded to the common depth with exact ReLU identity
    layers (each carried value split as ``[y]_+ - [-y]_+``), so sizes add only
    when all depths agree. Every layer must use a single activation.
    """
    if not nets:
        raise DomainError("juxtapose needs at least one network")
    depth = max(n.depth for n in nets)
    padded = [_pad(n, depth) for n in nets]
    total_in = sum(n.input_dim for n in nets)
    out_layers = []
    for k in range(depth):
        if len({p[k].activation for p in padded}) != 1:
            # one activation per layer
            kinds = [p[k].activation.kind if p[k].activation else "linear" for p in padded]
            raise DomainError(f"layer {k} mixes activations {kinds}")
        act = padded[0][k].activation
        fan_in_total = total_in if k == 0 else sum(p[k - 1].width for p in padded)
        rows: list[tuple[Fraction, ...]] = []
        bias: list[Fraction] = []
        offset = 0
        for p in padded:
            layer = p[k]
            for row, b in zip(layer.weights, layer.bias):
                full = [ZERO] * fan_in_total
                full[offset:offset + len(row)] = row
                rows.append(tuple(full))
                bias.append(b)
            offset += layer.fan_in
        out_layers.append(Layer(tuple(rows), tuple(bias), act))
    return Network(total_in, tuple(out_layers), {"juxtaposed": [n.meta.get("gadget") for n in nets]})
