"""Exact batched forward passes on integer-scaled inputs.

A batch is an integer matrix ``X`` with one shared denominator ``D`` (the
rational inputs are ``X / D``). Each layer is scaled to integer weights, so
the pre-activations stay integers over a growing common denominator. A layer
runs in int64 (compiled kernel when built, numpy otherwise) if a static
magnitude bound proves no accumulator can reach 2**62; otherwise it runs on
Python integers. Either way the result is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _fallback
from .exactnum import to_fraction
from .network import Layer, Network

try:
    from . import _kernel
except ImportError:  # extension not built
    _kernel = None

INT64_LIMIT = 1 << 62
_ACT_CODES = {None: 0, "relu": 1, "sign": 2}


def backend() -> str:
    return "cython" if _kernel is not None else "numpy"


def _int64_layer(x, w, b, act, use_kernel):
    if use_kernel and _kernel is not None:
        return _kernel.affine_layer(np.ascontiguousarray(x), np.ascontiguousarray(w),
                                    np.ascontiguousarray(b), act)
    return _fallback.affine_layer(x, w, b, act)


@dataclass
class BatchOutput:
    """Outputs ``num / den`` for a batch; ``num`` has one row per input."""

    num: np.ndarray
    den: int

    def fractions(self) -> list[tuple[Fraction, ...]]:
        return [tuple(Fraction(int(v), self.den) for v in row) for row in self.num]

    def column(self, j: int = 0) -> list[Fraction]:
        return [Fraction(int(v), self.den) for v in self.num[:, j]]

    def floats(self) -> np.ndarray:
        if self.num.dtype == object:
            return np.array([[int(v) / self.den for v in row] for row in self.num], dtype=float)
        return self.num.astype(float) / self.den

    def is_value(self, value) -> np.ndarray:
        """Boolean mask (rows x outputs) of entries exactly equal to ``value``."""
        q = to_fraction(value)
        if (self.den * q.numerator) % q.denominator:
            return np.zeros(self.num.shape, dtype=bool)
        target = self.den * q.numerator // q.denominator
        return self.num == target

    def compare(self, threshold) -> np.ndarray:
        """Per-entry sign of ``value - threshold`` as -1/0/1, exactly."""
        q = to_fraction(threshold)
        lhs = self.num * q.denominator if self.num.dtype == object else self.num.astype(object) * q.denominator
        rhs = q.numerator * self.den
        return np.sign(lhs - rhs).astype(np.int64)


def scale_inputs(rows: Sequence[Sequence]) -> tuple[np.ndarray, int]:
    """Common-denominator integer form of a list of rational vectors."""
    fr = [[to_fraction(v) for v in row] for row in rows]
    den = 1
    for row in fr:
        for v in row:
            den = math.lcm(den, v.denominator)
    num = np.empty((len(fr), len(fr[0]) if fr else 0), dtype=object)
    for i, row in enumerate(fr):
        for j, v in enumerate(row):
            num[i, j] = v.numerator * (den // v.denominator)
    return num, den


def _scaled_layer(layer: Layer) -> tuple[list[list[int]], list[int], int]:
    q = 1
    for row in layer.weights:
        for w in row:
            q = math.lcm(q, w.denominator)
    for b in layer.bias:
        q = math.lcm(q, b.denominator)
    w = [[int(v * q) for v in row] for row in layer.weights]
    b = [int(v * q) for v in layer.bias]
    return w, b, q


def _as_int64(x: np.ndarray) -> np.ndarray:
    return x if x.dtype == np.int64 else x.astype(np.int64)


def _as_object(x: np.ndarray) -> np.ndarray:
    if x.dtype == object:
        return x
    out = np.empty(x.shape, dtype=object)
    out[...] = [[int(v) for v in row] for row in x] if x.ndim == 2 else x.tolist()
    return out


def _pwl_layer(z: np.ndarray, den: int, act) -> tuple[np.ndarray, int]:
    """Apply a general piecewise-linear activation to ``z / den`` exactly."""
    z = _as_object(z)
    piece = np.zeros(z.shape, dtype=np.int64)
    for c in act.breakpoints:
        above = (z * c.denominator - c.numerator * den) > 0
        piece += above.astype(np.int64)
    lcm = 1
    for v in act.slopes + act.intercepts:
        lcm = math.lcm(lcm, v.denominator)
    out = np.empty(z.shape, dtype=object)
    for i, (a, b) in enumerate(zip(act.slopes, act.intercepts)):
        mask = piece == i
        if mask.any():
            an, bn = int(a * lcm), int(b * lcm)
            out[mask] = z[mask] * an + bn * den
    return out, den * lcm


def forward_scaled(net: Network, x: np.ndarray, den: int, *, use_kernel: bool = True,
                   force_exact_ints: bool = False) -> BatchOutput:
    """Forward pass of an integer-scaled batch ``x / den``."""
    if x.shape[1] != net.input_dim:
        raise ValueError(f"batch has {x.shape[1]} columns, network expects {net.input_dim}")
    cur = x
    bound = [int(v) for v in np.abs(_as_object(x)).max(axis=0)] if len(x) else [0] * net.input_dim
    for layer in net.layers:
        w, b, q = _scaled_layer(layer)
        bias = [v * den for v in b]
        zbound = [sum(abs(wi) * bj for wi, bj in zip(row, bound) if wi) + abs(bi)
                  for row, bi in zip(w, bias)]
        kind = layer.activation.kind if layer.activation is not None else None
        fits = (not force_exact_ints and kind in _ACT_CODES and max(zbound) < INT64_LIMIT
                and max(bound, default=0) < INT64_LIMIT)
        if fits:
            cur = _int64_layer(_as_int64(cur), np.array(w, dtype=np.int64),
                               np.array(bias, dtype=np.int64), _ACT_CODES[kind], use_kernel)
        else:
            wo = np.empty((len(w), len(w[0])), dtype=object)
            wo[...] = w
            bo = np.empty(len(bias), dtype=object)
            bo[...] = bias
            code = _ACT_CODES.get(kind, 0)
            cur = _fallback.affine_layer(_as_object(cur), wo, bo, code)
        new_den = den * q
        if kind == "sign":
            den, bound = 1, [1] * len(w)
        elif kind == "pwl":
            cur, den = _pwl_layer(cur, new_den, layer.activation)
            bound = [int(v) for v in np.abs(cur).max(axis=0)] if len(cur) else [0] * len(w)
        else:
            den, bound = new_den, zbound
    return BatchOutput(cur, den)


def evaluate_batch(net: Network, rows: Sequence[Sequence], **kw) -> BatchOutput:
    x, den = scale_inputs(rows)
    return forward_scaled(net, x, den, **kw)


def dyadic_uniform(rng: np.random.Generator, n: int, d: int, bits: int = 30) -> tuple[np.ndarray, int]:
    """``n`` points uniform on the dyadic grid of step 2**-bits in [0, 1)^d."""
    return rng.integers(0, 1 << bits, size=(n, d), dtype=np.int64), 1 << bits
