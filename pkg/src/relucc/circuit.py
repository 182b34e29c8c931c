"""Layered threshold circuits and their compilation to ReLU networks."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .exactnum import DomainError, format_fraction, to_fraction
from .network import RELU, SIGN, Layer, Network, ONE, ZERO

MAX_TABLE_BITS = 16


@dataclass(frozen=True)
class LTF:
    """``x -> sign(<weights, x> + bias)`` with integer weights and bias."""

    weights: tuple[int, ...]
    bias: int = 0

    def __post_init__(self):
        for v in self.weights + (self.bias,):
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise DomainError(f"LTF weights must be integers, got {v!r}")

    @classmethod
    def make(cls, weights, bias=0) -> "LTF":
        return cls(tuple(_as_int(w) for w in weights), _as_int(bias))

    @property
    def fan_in(self) -> int:
        return len(self.weights)

    def preactivation(self, x: Sequence[int]) -> int:
        return sum(w * v for w, v in zip(self.weights, x)) + self.bias

    def __call__(self, x: Sequence[int]) -> int:
        return 1 if self.preactivation(x) > 0 else 0


def _as_int(v) -> int:
    q = to_fraction(v)
    if q.denominator != 1:
        raise DomainError(f"threshold gates take integer weights, got {q}")
    return int(q)


def _check_bits(x: Sequence[int], d: int) -> tuple[int, ...]:
    if len(x) != d:
        raise DomainError(f"expected {d} input bits, got {len(x)}")
    out = []
    for v in x:
        if v not in (0, 1):
            raise DomainError(f"threshold circuits take Boolean inputs, got {v!r}")
        out.append(int(v))
    return tuple(out)


@dataclass(frozen=True)
class ThresholdCircuit:
    """Strictly layered: every gate of layer k reads all outputs of layer k-1."""

    input_dim: int
    layers: tuple[tuple[LTF, ...], ...]
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not self.layers:
            raise DomainError("a circuit needs at least one layer")
        width = self.input_dim
        for k, layer in enumerate(self.layers):
            if not layer:
                raise DomainError(f"layer {k} has no gates")
            for g in layer:
                if g.fan_in != width:
                    raise DomainError(f"gate in layer {k} reads {g.fan_in} values, previous width is {width}")
            width = len(layer)

    @property
    def size(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def output_dim(self) -> int:
        return len(self.layers[-1])

    def evaluate(self, x: Sequence[int]) -> tuple[int, ...]:
        y = _check_bits(x, self.input_dim)
        for layer in self.layers:
            y = tuple(g(y) for g in layer)
        return y

    __call__ = evaluate

    def evaluate_all(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized evaluation of a (n, d) 0/1 integer array."""
        y = np.asarray(xs, dtype=np.int64)
        if y.ndim != 2 or y.shape[1] != self.input_dim:
            raise DomainError(f"expected an (n, {self.input_dim}) array")
        if ((y != 0) & (y != 1)).any():
            raise DomainError("threshold circuits take Boolean inputs")
        for layer in self.layers:
            w = np.array([g.weights for g in layer], dtype=object).reshape(len(layer), -1)
            b = np.array([g.bias for g in layer], dtype=object)
            y = ((y.astype(object) @ w.T + b) > 0).astype(np.int64)
        return y

    def to_network(self) -> Network:
        """The same circuit as a network whose every layer uses the Sign activation."""
        layers = tuple(
            Layer(tuple(tuple(to_fraction(w) for w in g.weights) for g in layer),
                  tuple(to_fraction(g.bias) for g in layer), SIGN)
            for layer in self.layers
        )
        return Network(self.input_dim, layers, {"gadget": "threshold-circuit"})

    def to_json(self) -> dict:
        data = self.to_network().to_json()
        data.pop("meta", None)
        if self.meta:
            data["meta"] = dict(self.meta)
        return data

    def dumps(self, **kw) -> str:
        return json.dumps(self.to_json(), **kw)

    @classmethod
    def from_json(cls, data) -> "ThresholdCircuit":
        if isinstance(data, str):
            data = json.loads(data)
        layers = []
        for layer in data["layers"]:
            act = layer.get("activation", "sign")
            kind = act["kind"] if isinstance(act, dict) else act
            if kind != "sign":
                raise DomainError(f"circuit layers must use sign activations, got {kind!r}")
            layers.append(tuple(LTF.make(w, b) for w, b in zip(layer["weights"], layer["bias"])))
        return cls(int(data["input_dim"]), tuple(layers), dict(data.get("meta", {})))


def circuit(input_dim: int, layers: Sequence[Sequence[LTF | tuple]], **meta) -> ThresholdCircuit:
    built = []
    for layer in layers:
        built.append(tuple(g if isinstance(g, LTF) else LTF.make(*g) for g in layer))
    return ThresholdCircuit(input_dim, tuple(built), meta)


def evaluate_circuit(tc: ThresholdCircuit, x: Sequence[int]) -> tuple[int, ...]:
    return tc.evaluate(x)


def compile_to_relu(tc: ThresholdCircuit) -> Network:
    """Replace each gate by the pair ``[z]_+ - [z-1]_+`` of ReLU neurons.

    The pair equals ``sign(z)`` whenever ``z`` is an integer, which holds on
    Boolean inputs because the weights are integers. Output gates become pairs
    as well, read off by a final linear layer, giving depth ``m+1`` and size
    ``2s+q``.
    """
    layers: list[Layer] = []
    provenance = []
    for k, gates in enumerate(tc.layers):
        rows, bias = [], []
        for g_idx, g in enumerate(gates):
            if k == 0:
                row = tuple(to_fraction(w) for w in g.weights)
            else:
                # previous outputs are n1 - n2 for each previous pair
                row = tuple(v for w in g.weights for v in (to_fraction(w), to_fraction(-w)))
            rows.extend([row, row])
            bias.extend([to_fraction(g.bias), to_fraction(g.bias - 1)])
            provenance.append([k, g_idx])
        layers.append(Layer(tuple(rows), tuple(bias), RELU))
    q = tc.output_dim
    out_rows = []
    for i in range(q):
        row = [ZERO] * (2 * q)
        row[2 * i], row[2 * i + 1] = ONE, -ONE
        out_rows.append(tuple(row))
    layers.append(Layer(tuple(out_rows), (ZERO,) * q, None))
    return Network(tc.input_dim, tuple(layers), {"gadget": "compiled-circuit", "provenance": provenance,
                                                  "output": "linear"})


def hardwire(tc: ThresholdCircuit, assignment: Mapping[int, int]) -> ThresholdCircuit:
    """Fix some inputs to constants by folding them into first-layer biases."""
    for i, v in assignment.items():
        if not 0 <= i < tc.input_dim:
            raise DomainError(f"input index {i} out of range for {tc.input_dim} inputs")
        if v not in (0, 1):
            raise DomainError(f"assigned value for input {i} must be 0/1, got {v!r}")
    keep = [i for i in range(tc.input_dim) if i not in assignment]
    first = tuple(
        LTF(tuple(g.weights[i] for i in keep), g.bias + sum(g.weights[i] * v for i, v in assignment.items()))
        for g in tc.layers[0]
    )
    return ThresholdCircuit(len(keep), (first,) + tc.layers[1:], dict(tc.meta, hardwired=sorted(assignment)))


def extend_assignment(rest: Sequence[int], assignment: Mapping[int, int], d: int) -> tuple[int, ...]:
    """Merge free-input values (in index order) with a partial assignment."""
    it = iter(rest)
    return tuple(assignment[i] if i in assignment else next(it) for i in range(d))


def add_selector(tc: ThresholdCircuit) -> ThresholdCircuit:
    """Single-output circuit on ``d + l`` inputs that returns output ``i`` under the i-selector.

    Selector bits are carried through the original layers by identity gates,
    then ``OR_i (sel_i AND out_i)`` adds two layers and ``l + 1`` gates.
    """
    d, l = tc.input_dim, tc.output_dim
    layers: list[tuple[LTF, ...]] = []
    prev_width = d
    for k, gates in enumerate(tc.layers):
        new = []
        for g in gates:
            new.append(LTF(g.weights + (0,) * l, g.bias))
        for i in range(l):
            w = [0] * (prev_width + l)
            w[prev_width + i] = 1
            new.append(LTF(tuple(w), 0))
        layers.append(tuple(new))
        prev_width = len(gates)
    ands = []
    for i in range(l):
        w = [0] * (2 * l)
        w[i] = 1
        w[l + i] = 1
        ands.append(LTF(tuple(w), -1))
    layers.append(tuple(ands))
    layers.append((LTF((1,) * l, 0),))
    return ThresholdCircuit(d + l, tuple(layers), dict(tc.meta, selector=l))


def selector(l: int, i: int) -> tuple[int, ...]:
    return tuple(1 if j == i else 0 for j in range(l))


def _index_bits(index: int, d: int) -> tuple[int, ...]:
    return tuple((index >> k) & 1 for k in range(d))


def bits_index(bits: Sequence[int]) -> int:
    return sum(int(b) << k for k, b in enumerate(bits))


def truth_table_to_circuit(table: Sequence, d: int | None = None) -> ThresholdCircuit:
    """Depth-2 circuit from a truth table indexed by ``sum(x_k * 2**k)``.

    Entries are bits, or equal-length bit tuples for a multi-output function.
    Layer 1 has one detector gate per input pattern with a nonzero output,
    layer 2 one OR gate per output bit.
    """
    n = len(table)
    if d is None:
        d = max(n.bit_length() - 1, 0)
    if n != 1 << d:
        raise DomainError(f"table length {n} is not 2**d")
    if d > MAX_TABLE_BITS:
        raise DomainError(f"truth tables are limited to d <= {MAX_TABLE_BITS}")
    rows = [tuple(int(b) for b in e) if isinstance(e, (tuple, list)) else (int(e),) for e in table]
    q = len(rows[0])
    if any(len(r) != q for r in rows):
        raise DomainError("ragged multi-output truth table")
    if all(all(r) for r in rows):
        always = LTF((0,) * d, 1)
        return ThresholdCircuit(d, ((always,), tuple(LTF((1,), 0) for _ in range(q))),
                                {"gadget": "truth-table"})
    detectors: list[LTF] = []
    owners: list[tuple[int, ...]] = []
    for idx, r in enumerate(rows):
        if not any(r):
            continue
        x = _index_bits(idx, d)
        detectors.append(LTF(tuple(1 if b else -1 for b in x), 1 - sum(x)))
        owners.append(r)
    if not detectors:
        detectors = [LTF((0,) * d, 0)]  # constant 0
        owners = [(0,) * q]
    outs = tuple(LTF(tuple(o[j] for o in owners), 0) for j in range(q))
    return ThresholdCircuit(d, (tuple(detectors), outs), {"gadget": "truth-table"})


def all_inputs(d: int) -> np.ndarray:
    """All 2**d Boolean vectors, row ``i`` being ``_index_bits(i)``."""
    idx = np.arange(1 << d, dtype=np.int64)
    return ((idx[:, None] >> np.arange(d, dtype=np.int64)) & 1).astype(np.int64)


def random_circuit(rng: np.random.Generator, d: int, max_gates: int = 20, max_depth: int = 4,
                   max_weight: int = 3, outputs: int | None = None) -> ThresholdCircuit:
    """Random layered circuit with small integer weights, for property tests."""
    m = int(rng.integers(1, max_depth + 1))
    q = outputs if outputs is not None else int(rng.integers(1, 3))
    budget = max_gates - q
    widths = []
    for _ in range(m - 1):
        if budget < 1:
            break
        w = int(rng.integers(1, max(2, min(6, budget) + 1)))
        w = min(w, budget)
        widths.append(w)
        budget -= w
    widths.append(q)
    layers = []
    fan_in = d
    for w in widths:
        gates = []
        for _ in range(w):
            weights = tuple(int(v) for v in rng.integers(-max_weight, max_weight + 1, size=fan_in))
            bias = int(rng.integers(-max_weight * max(1, fan_in // 2), max_weight + 1))
            gates.append(LTF(weights, bias))
        layers.append(tuple(gates))
        fan_in = w
    return ThresholdCircuit(d, tuple(layers), {"gadget": "random"})


def exhaustive_inputs(d: int):
    return itertools.product((0, 1), repeat=d)
