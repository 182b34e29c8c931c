"""Constructors for the explicit networks: sawtooth, bit extractors, Boolean
gadgets, thresholding, decoding, rounding, Lipschitz lifting and the
extractor -> compiled circuit -> decoder approximator.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .circuit import ThresholdCircuit, bits_index, compile_to_relu
from .exactnum import DomainError, sign_biquadratic, sqrt_bounds, to_fraction
from .network import RELU, Layer, Network, ONE, ZERO, compose, juxtapose, network

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


def phi() -> Network:
    """One tooth: ``[2z]_+ - [4z-2]_+``."""
    return network(1, [([[2], [4]], [0, -2], RELU), ([[1, -1]], [0], None)], gadget="phi")


def sawtooth(j: int) -> Network:
    """``phi`` composed ``j`` times: j ReLU layers of width 2 and a linear output."""
    if j < 1:
        raise DomainError("sawtooth needs j >= 1")
    net = phi()
    for _ in range(j - 1):
        net = compose(phi(), net)
    return net.with_meta(gadget="sawtooth", j=j, construction="sawtooth composition")


def default_delta(c: int) -> Fraction:
    return Fraction(1, 1 << (c + 3))


def _check_delta(delta) -> Fraction:
    delta = to_fraction(delta)
    if not 0 < delta < 1:
        raise DomainError(f"Delta must lie in (0, 1), got {delta}")
    return delta


def _shallow_coordinate(c: int, delta: Fraction) -> Network:
    n = 1 << c
    scale = Fraction(n) / delta
    rows, bias = [], []
    # neuron 2l reads (t - l + Delta)/Delta, neuron 2l+1 reads (t - l)/Delta with t = 2**c x
    for l in range(n + 1):
        rows.append([scale])
        bias.append((delta - l) / delta)
        rows.append([scale])
        bias.append(Fraction(-l) / delta)
    # g_l = u_l - v_l ; g'_l = g_l - g_{l+1} ; h_j = sum over l with bit j set
    out = []
    for j in range(c):
        w = [ZERO] * (2 * (n + 1))
        for l in range(n):
            if (l >> j) & 1:
                w[2 * l] += 1
                w[2 * l + 1] -= 1
                w[2 * l + 2] -= 1
                w[2 * l + 3] += 1
        out.append(w)
    return network(1, [(rows, bias, RELU), (out, [ZERO] * c, None)])


def bit_extractor_shallow(c: int, delta=None, d: int = 1) -> Network:
    """Depth-2 network mapping ``x in [0,1]^d`` to ``bin(trunc(x))`` (c LSB-first bits per coordinate).

    Wrong only when some ``2**c * x_i`` falls in a strip ``(l+1-Delta, l+1)``.
    Hidden width per coordinate is ``2 * (2**c + 1)``.
    """
    if c < 1 or d < 1:
        raise DomainError("need c >= 1 and d >= 1")
    delta = _check_delta(default_delta(c) if delta is None else delta)
    block = _shallow_coordinate(c, delta)
    net = block if d == 1 else juxtapose([block] * d)
    return net.with_meta(gadget="bit-extractor-shallow", c=c, delta=str(delta), d=d,
                         construction="depth-2 binary extraction")


def _deep_coordinate(c: int, delta: Fraction) -> Network:
    """Bit with weight ``2**-j`` is ``h_Delta(phi^j(x - 2**-(j+1)))``.

    Chains for shallower bits are carried to the common depth by single ReLU
    neurons; every carried value is non-negative.
    """
    depth = c + 1  # hidden layers
    # chain for level j: layers 1..j phi pairs, layer j+1 the h_Delta pair, then carries
    layers_rows: list[list[list[Fraction]]] = [[] for _ in range(depth)]
    layers_bias: list[list[Fraction]] = [[] for _ in range(depth)]
    # position of each chain's neurons in each layer
    pos: dict[int, list[tuple[int, int]]] = {}
    for j in range(1, c + 1):
        pos[j] = []
        for k in range(depth):
            width = 2 if k <= j else 1  # k is 0-based layer index; k == j is the h pair
            start = len(layers_bias[k])
            pos[j].append((start, width))
            layers_bias[k].extend([ZERO] * width)
            layers_rows[k].extend([None] * width)
    shift = {j: Fraction(1, 1 << (j + 1)) for j in range(1, c + 1)}
    inv = 1 / delta
    for j in range(1, c + 1):
        for k in range(depth):
            start, width = pos[j][k]
            fan_in = 1 if k == 0 else len(layers_bias[k - 1])
            if k == 0:
                # y = x - shift
                src = {0: ONE}
                const = -shift[j]
            else:
                ps, pw = pos[j][k - 1]
                src = {ps: ONE, ps + 1: -ONE} if pw == 2 else {ps: ONE}
                const = ZERO
            def row(scale, offset):
                r = [ZERO] * fan_in
                for idx, w in src.items():
                    r[idx] = w * scale
                return r, const * scale + offset
            if k < j:
                for n_idx, (a, b) in enumerate(((2, 0), (4, -2))):
                    r, bb = row(Fraction(a), Fraction(b))
                    layers_rows[k][start + n_idx] = r
                    layers_bias[k][start + n_idx] = bb
            elif k == j:
                for n_idx, off in enumerate((-HALF + delta / 2, -HALF - delta / 2)):
                    r, bb = row(inv, off * inv)
                    layers_rows[k][start + n_idx] = r
                    layers_bias[k][start + n_idx] = bb
            else:
                r, bb = row(ONE, ZERO)
                layers_rows[k][start] = r
                layers_bias[k][start] = bb
    out_rows = []
    last = depth - 1
    last_width = len(layers_bias[last])
    for i in range(c):  # LSB-first output i is level j = c - i
        j = c - i
        start, width = pos[j][last]
        r = [ZERO] * last_width
        r[start] = ONE
        if width == 2:
            r[start + 1] = -ONE
        out_rows.append(r)
    specs = [(layers_rows[k], layers_bias[k], RELU) for k in range(depth)]
    specs.append((out_rows, [ZERO] * c, None))
    return network(1, specs)


def bit_extractor_deep(c: int, delta=None, d: int = 1) -> Network:
    """Sawtooth-based extractor with O(c**2) neurons per coordinate and depth ``c + 2``."""
    if c < 1 or d < 1:
        raise DomainError("need c >= 1 and d >= 1")
    delta = _check_delta(default_delta(c) if delta is None else delta)
    block = _deep_coordinate(c, delta)
    net = block if d == 1 else juxtapose([block] * d)
    return net.with_meta(gadget="bit-extractor-deep", c=c, delta=str(delta), d=d,
                         construction="sawtooth binary extraction")


def h_delta(y, delta) -> Fraction:
    """Ramp from 0 at ``1/2 - Delta/2`` to 1 at ``1/2 + Delta/2``."""
    y, delta = to_fraction(y), to_fraction(delta)
    a = max(ZERO, (y - HALF + delta / 2) / delta)
    b = max(ZERO, (y - HALF - delta / 2) / delta)
    return a - b


# Boolean gadgets -----------------------------------------------------------

GADGET_KINDS = ("AND", "NOR", "PARITY", "DISJ", "IP")


def parity_coefficients(d: int) -> list[int]:
    """Weights of ``[s - l]_+`` (l = 0..d-1) summing to ``s mod 2`` for integers 0 <= s <= d."""
    return [1] + [2 * (-1) ** l for l in range(1, d)]


def boolean_gadget(kind: str, d: int) -> Network:
    kind = kind.upper()
    if d < 1:
        raise DomainError("gadgets need d >= 1")
    if kind == "AND":
        return network(d, [([[1] * d], [-(d - 1)], RELU)], gadget="AND", d=d, output="relu")
    if kind == "NOR":
        return network(d, [([[-1] * d], [1], RELU)], gadget="NOR", d=d, output="relu")
    if kind == "PARITY":
        return network(d, [([[1] * d for _ in range(d)], [-l for l in range(d)], RELU),
                           ([parity_coefficients(d)], [0], None)], gadget="PARITY", d=d, output="linear")
    ands = []
    for i in range(d):
        row = [0] * (2 * d)
        row[i] = row[d + i] = 1
        ands.append(row)
    if kind == "DISJ":
        return network(2 * d, [(ands, [-1] * d, RELU), ([[-1] * d], [1], RELU)],
                       gadget="DISJ", d=d, output="relu")
    if kind == "IP":
        return network(2 * d, [(ands, [-1] * d, RELU),
                               ([[1] * d for _ in range(d)], [-l for l in range(d)], RELU),
                               ([parity_coefficients(d)], [0], None)], gadget="IP", d=d, output="linear")
    raise DomainError(f"unknown gadget {kind!r}; choose from {GADGET_KINDS}")


def disj(x: Sequence[int], y: Sequence[int]) -> int:
    return int(not any(a and b for a, b in zip(x, y)))


def ip(x: Sequence[int], y: Sequence[int]) -> int:
    return sum(a & b for a, b in zip(x, y)) & 1


def boolean_oracle(kind: str, d: int) -> Callable[[Sequence[int]], int]:
    """Direct definition of each gadget's Boolean function."""
    kind = kind.upper()
    if kind == "AND":
        return lambda z: int(all(z))
    if kind == "NOR":
        return lambda z: int(not any(z))
    if kind == "PARITY":
        return lambda z: sum(z) & 1
    if kind == "DISJ":
        return lambda z: disj(z[:d], z[d:])
    if kind == "IP":
        return lambda z: ip(z[:d], z[d:])
    raise DomainError(f"unknown gadget {kind!r}")


def threshold_output(net: Network) -> Network:
    """Append ``[3N-1]_+ - [3N-2]_+``: values <= 1/3 go to 0, values >= 2/3 go to 1."""
    if net.output_dim != 1:
        raise DomainError("threshold_output needs a single-output network")
    t = network(1, [([[3], [3]], [-1, -2], RELU), ([[1, -1]], [0], None)])
    return compose(t, net).with_meta(gadget="thresholded", base=net.meta.get("gadget"), output="linear")


def binary_decoder(c: int) -> Network:
    """Linear map ``bits -> sum_j bits_j * 2**j / 2**c`` (LSB first)."""
    if c < 1:
        raise DomainError("decoder needs c >= 1")
    return network(c, [([[Fraction(1 << j, 1 << c) for j in range(c)]], [0], None)],
                   gadget="binary-decoder", c=c)


def rounding_layer(d: int) -> Network:
    """``z_i = [2x_i - 1/2]_+ - [2x_i - 3/2]_+``: 2d hidden ReLUs and a linear read-out."""
    rows, bias, out = [], [], []
    for i in range(d):
        r = [0] * d
        r[i] = 2
        rows.extend([r, r])
        bias.extend([Fraction(-1, 2), Fraction(-3, 2)])
        o = [0] * (2 * d)
        o[2 * i], o[2 * i + 1] = 1, -1
        out.append(o)
    return network(d, [(rows, bias, RELU), (out, [0] * d, None)], gadget="rounding", d=d)


# distributions and Lipschitz lifting ---------------------------------------

CUBE_KINDS = ("uniform_cube", "corner_cubes", "uniform_boolean")


@dataclass(frozen=True)
class CubeDistribution:
    kind: str

    def __post_init__(self):
        if self.kind not in CUBE_KINDS:
            raise DomainError(f"unknown distribution {self.kind!r}; choose from {CUBE_KINDS}")

    def sample(self, rng: np.random.Generator, n: int, d: int, bits: int = 30) -> tuple[np.ndarray, int]:
        """Exact dyadic samples as an integer array over the denominator ``2**bits``."""
        den = 1 << bits
        if self.kind == "uniform_cube":
            return rng.integers(0, den, size=(n, d), dtype=np.int64), den
        if self.kind == "uniform_boolean":
            return rng.integers(0, 2, size=(n, d), dtype=np.int64) * den, den
        quarter = den >> 2
        k = rng.integers(0, quarter + 1, size=(n, d), dtype=np.int64)
        side = rng.integers(0, 2, size=(n, d), dtype=np.int64)
        return np.where(side == 1, den - k, k), den

    def boxes(self, d: int) -> list[tuple[tuple[Fraction, Fraction], ...]]:
        """Support as boxes of equal mass (uniform kinds only)."""
        if self.kind == "uniform_cube":
            return [((ZERO, ONE),) * d]
        if self.kind == "corner_cubes":
            sides = ((ZERO, QUARTER), (Fraction(3, 4), ONE))
            return [tuple(sides[b] for b in z) for z in itertools.product((0, 1), repeat=d)]
        raise DomainError("the Boolean distribution has no box decomposition")


UNIFORM_CUBE = CubeDistribution("uniform_cube")
CORNER_CUBES = CubeDistribution("corner_cubes")
UNIFORM_BOOLEAN = CubeDistribution("uniform_boolean")

VARIANTS = {"four_lipschitz": (ONE, Fraction(4), 4), "quarter_height": (QUARTER, ONE, 1)}


@dataclass(frozen=True)
class LiftValue:
    """``gz * max(0, height - scale * sqrt(sqdist))`` kept in radical form."""

    gz: int
    height: Fraction
    scale: Fraction
    sqdist: Fraction

    @property
    def vanishes(self) -> bool:
        return self.gz == 0 or self.scale * self.scale * self.sqdist >= self.height * self.height

    def parts(self) -> tuple[Fraction, Fraction, Fraction]:
        """``(rational, radical coefficient, radicand)`` of the value."""
        if self.vanishes:
            return ZERO, ZERO, ZERO
        return self.height, -self.scale, self.sqdist


class LiftedFunction:
    """``f(x) = sum_z g(z) h_z(x)`` for a Boolean ``g``; only ``z = round(x)`` can contribute.

    ``four_lipschitz`` uses ``h_z = max(0, 1 - 4 dist(x, A_z))`` and agrees with
    ``g`` on the cube; ``quarter_height`` uses ``max(0, 1/4 - dist(x, A_z))``.
    """

    def __init__(self, g, d: int, variant: str = "four_lipschitz"):
        if variant not in VARIANTS:
            raise DomainError(f"unknown variant {variant!r}")
        self.d = d
        self.variant = variant
        self.height, self.scale, self.lipschitz = VARIANTS[variant]
        if callable(g):
            self.table = tuple(int(g(tuple((i >> k) & 1 for k in range(d)))) for i in range(1 << d))
        else:
            self.table = tuple(int(v) for v in g)
            if len(self.table) != 1 << d:
                raise DomainError("truth table length must be 2**d")

    def g(self, z: Sequence[int]) -> int:
        return self.table[bits_index(z)]

    def lift_value(self, x: Sequence) -> LiftValue:
        if len(x) != self.d:
            raise DomainError(f"expected {self.d} coordinates")
        xs = [to_fraction(v) for v in x]
        z = tuple(1 if v > HALF else 0 for v in xs)
        sq = ZERO
        for v, zi in zip(xs, z):
            gap = abs(v - zi) - QUARTER
            if gap > 0:
                sq += gap * gap
        return LiftValue(self.g(z), self.height, self.scale, sq)

    def exact(self, x: Sequence) -> Fraction:
        """Exact value; raises when the distance is irrational and the bump is active."""
        v = self.lift_value(x)
        if v.vanishes:
            return ZERO
        lo, hi = sqrt_bounds(v.sqdist, 1)
        if lo != hi:
            raise DomainError("value is irrational at this point; use bounds()")
        return v.height - v.scale * lo

    def bounds(self, x: Sequence, bits: int = 64) -> tuple[Fraction, Fraction]:
        v = self.lift_value(x)
        if v.vanishes:
            return ZERO, ZERO
        lo, hi = sqrt_bounds(v.sqdist, bits)
        return max(ZERO, v.height - v.scale * hi), v.height - v.scale * lo

    def __call__(self, x: Sequence) -> float:
        lo, hi = self.bounds(x, 60)
        return float((lo + hi) / 2)

    def lipschitz_pair(self, x: Sequence, y: Sequence, constant=None) -> bool:
        """Exact test of ``|f(x) - f(y)| <= L * ||x - y||_2``."""
        L = to_fraction(self.lipschitz if constant is None else constant)
        a, b = self.lift_value(x), self.lift_value(y)
        r1, p, m = a.parts()
        r2, q, n = b.parts()
        r = r1 - r2
        q = -q
        norm2 = sum((to_fraction(u) - to_fraction(v)) ** 2 for u, v in zip(x, y))
        # L^2 ||x-y||^2 - (r + p sqrt(m) + q sqrt(n))^2 >= 0
        c0 = L * L * norm2 - r * r - p * p * m - q * q * n
        return sign_biquadratic(c0, -2 * r * p, -2 * r * q, -2 * p * q, m, n) >= 0


def lipschitz_lift(g, d: int, variant: str = "four_lipschitz") -> LiftedFunction:
    return LiftedFunction(g, d, variant)


def agreement_network(g_net: Network) -> Network:
    """``g_net`` applied after rounding each coordinate; size grows by ``2d``."""
    d = g_net.input_dim
    return compose(g_net, rounding_layer(d)).with_meta(gadget="agreement", base=g_net.meta.get("gadget"))


def benign_approximator(tc: ThresholdCircuit, c: int, d: int, delta=None, extractor: str = "shallow") -> Network:
    """Bit extraction, then the compiled circuit, then the binary decoder."""
    if tc.input_dim != c * d or tc.output_dim != c:
        raise DomainError(f"circuit must map {c * d} bits to {c} bits")
    if extractor == "shallow":
        ext = bit_extractor_shallow(c, delta, d)
    elif extractor == "deep":
        ext = bit_extractor_deep(c, delta, d)
    else:
        raise DomainError(f"unknown extractor {extractor!r}")
    net = compose(binary_decoder(c), compose(compile_to_relu(tc), ext))
    return net.with_meta(gadget="benign-approximator", c=c, d=d, extractor=extractor,
                         delta=ext.meta["delta"], circuit_depth=tc.depth, circuit_size=tc.size)


def point_detector(z: Sequence[int]) -> tuple[list[int], int]:
    """Weights and bias of ``[<w, x> - (|z| - 1)]_+``: 1 at ``x = z``, 0 elsewhere on the cube."""
    return [1 if b else -1 for b in z], 1 - sum(z)


def corrupted_network(base: Network, points: Sequence[Sequence[int]]) -> Network:
    """``base`` with its Boolean output flipped exactly on ``points``.

    Detector neurons for the points ride alongside the hidden layers (carried
    by identity ReLUs, their values being non-negative), then the output is
    replaced by ``|P - D| = [P - D]_+ + [D - P]_+`` with ``D`` the detector sum.
    """
    if base.output_dim != 1:
        raise DomainError("corruption needs a single-output network")
    hidden = base.layers[:-1]
    if not hidden or any(layer.activation != RELU for layer in hidden):
        raise DomainError("corruption needs ReLU hidden layers")
    pts = [tuple(int(b) for b in z) for z in points]
    if any(len(z) != base.input_dim for z in pts):
        raise DomainError("corruption points must match the input dimension")
    k = len(pts)
    if k == 0:
        return base
    layers = []
    for i, layer in enumerate(hidden):
        width = layer.width
        if i == 0:
            rows = [list(r) for r in layer.weights] + [point_detector(z)[0] for z in pts]
            bias = list(layer.bias) + [point_detector(z)[1] for z in pts]
        else:
            prev = hidden[i - 1].width
            rows = [list(r) + [ZERO] * k for r in layer.weights]
            rows += [[ZERO] * prev + [ONE if j == t else ZERO for j in range(k)] for t in range(k)]
            bias = list(layer.bias) + [ZERO] * k
        layers.append((rows, bias, RELU))
    last = base.layers[-1]
    prev = hidden[-1].width
    if last.activation is not None:
        # keep the base output neuron, carry detectors one more layer
        rows = [list(last.weights[0]) + [ZERO] * k]
        rows += [[ZERO] * prev + [ONE if j == t else ZERO for j in range(k)] for t in range(k)]
        layers.append((rows, [last.bias[0]] + [ZERO] * k, last.activation))
        p_row, p_bias = [ONE], ZERO
    else:
        p_row, p_bias = list(last.weights[0]), last.bias[0]
    up = p_row + [-ONE] * k
    down = [-w for w in p_row] + [ONE] * k
    layers.append(([up, down], [p_bias, -p_bias], RELU))
    layers.append(([[1, 1]], [0], None))
    return network(base.input_dim, layers, gadget="corrupted", base=base.meta.get("gadget"), corrupted=k)


def random_points(rng: np.random.Generator, n: int, count: int) -> list[tuple[int, ...]]:
    """``count`` distinct points of ``{0,1}^n``, in index order."""
    idx = rng.choice(1 << n, size=count, replace=False)
    return [tuple((int(i) >> b) & 1 for b in range(n)) for i in sorted(idx)]
