"""Two-party protocols that evaluate threshold gates and whole networks.

Alice and Bob split the input coordinates according to a :class:`Partition`
and both know every weight. Two cost models are simulated:

* randomized: players exchange bits and share a random stream; each
  comparison runs the greater-than subprotocol :func:`randomized_gt`;
* real: each round both players announce a rational number and a referee
  appends the bit ``alpha > beta``; cost is the number of referee bits.

A network is evaluated neuron by neuron, layer by layer: once the pieces of
all lower neurons are known, a neuron's pre-activation is an exact affine
form in the original inputs, and one comparison (binary search over the
breakpoints for general piecewise-linear activations) resolves it.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .circuit import LTF, ThresholdCircuit
from .exactnum import DomainError, format_fraction, to_fraction
from .network import AffineForm, Network, combine

HALF = Fraction(1, 2)
MAX_PIECES = 1 << 32


@dataclass(frozen=True)
class Partition:
    """Input coordinates held by Alice; Bob holds the rest. Both sides nonempty."""

    n: int
    alice: frozenset[int]

    def __post_init__(self):
        if not self.alice or len(self.alice) >= self.n:
            raise DomainError("both players must hold at least one coordinate")
        if any(not 0 <= i < self.n for i in self.alice):
            raise DomainError("partition index out of range")

    @classmethod
    def of(cls, n: int, alice: Sequence[int]) -> "Partition":
        return cls(n, frozenset(int(i) for i in alice))

    @classmethod
    def parse(cls, spec: str, n: int | None = None) -> "Partition":
        """``"AABBA"`` (owner per coordinate) or ``"0,2,3"`` (Alice's indices, needs n)."""
        spec = spec.strip()
        if spec and set(spec.upper()) <= {"A", "B"}:
            return cls(len(spec), frozenset(i for i, ch in enumerate(spec.upper()) if ch == "A"))
        if n is None:
            raise DomainError("index-list partitions need the input size")
        return cls.of(n, [int(t) for t in spec.split(",") if t.strip()])

    @classmethod
    def split(cls, n: int) -> "Partition":
        """First half to Alice (the x/y split for two-vector inputs)."""
        return cls.of(n, range(n // 2))

    @property
    def bob(self) -> frozenset[int]:
        return frozenset(range(self.n)) - self.alice

    def owner(self, i: int) -> str:
        return "alice" if i in self.alice else "bob"

    def spec(self) -> str:
        return "".join("A" if i in self.alice else "B" for i in range(self.n))


def all_partitions(n: int) -> Iterator[Partition]:
    for mask in range(1, (1 << n) - 1):
        yield Partition(n, frozenset(i for i in range(n) if (mask >> i) & 1))


def random_partitions(rng: np.random.Generator, n: int, count: int) -> list[Partition]:
    out = []
    while len(out) < count:
        mask = rng.integers(0, 2, size=n)
        if 0 < mask.sum() < n:
            out.append(Partition(n, frozenset(int(i) for i in np.flatnonzero(mask))))
    return out


def sweep_partitions(n: int, rng: np.random.Generator, exhaustive_up_to: int = 8, samples: int = 100):
    """All partitions for small inputs, otherwise a random sample."""
    if n <= exhaustive_up_to:
        return list(all_partitions(n))
    return random_partitions(rng, n, samples)


class SharedRandomness:
    """Public coin visible to both players; replayable from its seed."""

    def __init__(self, seed: int):
        self.seed = int(seed) & ((1 << 64) - 1)
        self._rng = random.Random(self.seed)

    def getrandbits(self, k: int) -> int:
        return self._rng.getrandbits(k) if k > 0 else 0

    def bits(self, d: int) -> tuple[int, ...]:
        v = self.getrandbits(d)
        return tuple((v >> i) & 1 for i in range(d))


@dataclass
class Transcript:
    model: str
    events: list = field(default_factory=list)
    comparisons: list = field(default_factory=list)
    output: int | None = None

    @property
    def cost(self) -> int:
        if self.model == "real":
            return len(self.events)
        return sum(1 for e in self.events if "bit" in e)

    def send(self, speaker: str, bit: int) -> None:
        self.events.append({"speaker": speaker, "bit": int(bit)})

    def referee(self, alpha: Fraction, beta: Fraction) -> int:
        bit = 1 if alpha > beta else 0
        self.events.append({"alpha": format_fraction(alpha), "beta": format_fraction(beta), "bit": bit})
        return bit

    def to_json(self) -> dict:
        return {"model": self.model, "events": self.events, "comparisons": self.comparisons,
                "cost": self.cost, "output": self.output}


# greater-than ------------------------------------------------------------

def gt_steps(bit_len: int) -> int:
    """Binary-search rounds over prefix lengths 0..bit_len+1."""
    return max(1, math.ceil(math.log2(bit_len + 2)))


def fingerprint_bits(bit_len: int, eps) -> int:
    eps = to_fraction(eps)
    return max(1, math.ceil(math.log2(gt_steps(bit_len) / eps)))


def gt_cost_bound(bit_len: int, eps) -> int:
    """Worst-case bits of :func:`randomized_gt`: ``steps * (k + 1)``."""
    return gt_steps(bit_len) * (fingerprint_bits(bit_len, eps) + 1)


GT_COST_CONSTANT = 4
"""``gt_cost_bound(n, eps) <= GT_COST_CONSTANT * log2(n+2) * log2((n+2)/eps)`` for eps <= 1/2."""


def _parity(v: int) -> int:
    return v.bit_count() & 1


def randomized_gt(a: int, b: int, bit_len: int, eps, rnd: SharedRandomness,
                  transcript: Transcript | None = None) -> tuple[bool, int]:
    """Decide ``a > b`` where Alice holds ``a`` and Bob holds ``b``.

    Both values are offset by ``2**bit_len`` to be non-negative ``bit_len + 1``
    bit numbers. The players binary-search the longest common prefix: in each
    round Alice sends ``k`` random GF(2) inner products of her prefix, Bob
    answers whether his match. A different prefix survives a round with
    probability ``2**-k``, so with ``k = ceil(log2(steps/eps))`` the whole
    search errs with probability at most ``eps`` (and only by overshooting).
    At the first differing position the two bits differ, so each player
    reads the answer off their own bit and nothing more is sent.
    """
    if bit_len <= 0:
        raise DomainError("bit_len must be positive")
    eps = to_fraction(eps)
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    bound = 1 << bit_len
    if abs(a) >= bound or abs(b) >= bound:
        raise DomainError(f"|a|, |b| must be below 2**{bit_len}")
    t = transcript if transcript is not None else Transcript("randomized")
    start = len(t.events)
    width = bit_len + 1
    A, B = a + bound, b + bound
    k = fingerprint_bits(bit_len, eps)
    lo, hi = 0, width
    while lo < hi:
        mid = (lo + hi + 1) // 2
        pa, pb = A >> (width - mid), B >> (width - mid)
        equal = True
        for _ in range(k):
            mask = rnd.getrandbits(mid)
            fa = _parity(pa & mask)
            t.send("alice", fa)
            if fa != _parity(pb & mask):
                equal = False
        t.send("bob", int(equal))
        if equal:
            lo = mid
        else:
            hi = mid - 1
    # Bob's view; Alice's (her bit is 1) agrees whenever the search was right
    result = lo < width and not (B >> (width - lo - 1)) & 1
    return result, len(t.events) - start


def _split_sums(coeffs: Sequence[int], const: int, p: Partition, x: Sequence[int]) -> tuple[int, int, int]:
    """Alice's ``alpha``, Bob's ``beta`` (decide ``alpha > beta``) and a shared magnitude bound."""
    alpha = beta = 0
    amax, bmax = 0, abs(const)
    for i, a in enumerate(coeffs):
        if not a:
            continue
        if i in p.alice:
            alpha += a * x[i]
            amax += abs(a)
        else:
            beta -= a * x[i]
            bmax += abs(a)
    beta -= const
    return alpha, beta, max(amax, bmax, 1)


def _integer_form(form: AffineForm, threshold: Fraction) -> tuple[list[int], int]:
    den = 1
    for v in form.coefficients:
        den = math.lcm(den, v.denominator)
    shifted = form.bias - threshold
    den = math.lcm(den, shifted.denominator)
    return [int(v * den) for v in form.coefficients], int(shifted * den)


def _check_binary(x: Sequence[int], n: int) -> tuple[int, ...]:
    if len(x) != n:
        raise DomainError(f"expected {n} input bits, got {len(x)}")
    if any(v not in (0, 1) for v in x):
        raise DomainError("protocol inputs must be bits")
    return tuple(int(v) for v in x)


def evaluate_ltf_randomized(ltf: LTF, p: Partition, x: Sequence[int], eps, rnd: SharedRandomness,
                            transcript: Transcript | None = None) -> tuple[int, int]:
    x = _check_binary(x, ltf.fan_in)
    if p.n != ltf.fan_in:
        raise DomainError("partition size does not match the gate")
    alpha, beta, mag = _split_sums(ltf.weights, ltf.bias, p, x)
    bit, cost = randomized_gt(alpha, beta, mag.bit_length(), eps, rnd, transcript)
    return int(bit), cost


def evaluate_ltf_real(ltf: LTF, p: Partition, x: Sequence[int],
                      transcript: Transcript | None = None) -> tuple[int, int]:
    """One referee round: Alice announces her partial sum, Bob the rest of the threshold."""
    x = _check_binary(x, ltf.fan_in)
    if p.n != ltf.fan_in:
        raise DomainError("partition size does not match the gate")
    t = transcript if transcript is not None else Transcript("real")
    alpha, beta, _ = _split_sums(ltf.weights, ltf.bias, p, x)
    bit = t.referee(Fraction(alpha), Fraction(beta))
    return bit, 1


# network evaluation ---------------------------------------------------------

Comparator = Callable[[AffineForm, Fraction, str], bool]


def _resolve(net: Network, compare: Comparator) -> int:
    """Walk the network, resolving each activated neuron with comparisons; return the output bit."""
    if net.output_dim != 1:
        raise DomainError("protocols need a single (Boolean) output")
    d = net.input_dim
    forms = [AffineForm.coordinate(d, i) for i in range(d)]
    last = len(net.layers) - 1
    for k, layer in enumerate(net.layers):
        pre = [combine(row, forms, b, d) for row, b in zip(layer.weights, layer.bias)]
        act = layer.activation
        if k == last:
            f = pre[0]
            label = f"L{k}N0"
            if act is None or act.kind == "relu":
                # relu(z) > 1/2 iff z > 1/2
                return int(compare(f, HALF, label))
            if act.kind == "sign":
                return int(compare(f, Fraction(0), label))
            piece = _search_piece(f, act, compare, label)
            return int(compare(f.scale(act.slopes[piece]).shift(act.intercepts[piece]), HALF, label))
        if act is None:
            forms = pre
            continue
        if act.pieces > MAX_PIECES:
            raise DomainError("activation has too many pieces")
        out = []
        for n_idx, f in enumerate(pre):
            piece = _search_piece(f, act, compare, f"L{k}N{n_idx}")
            out.append(f.scale(act.slopes[piece]).shift(act.intercepts[piece]))
        forms = out
    raise AssertionError("unreachable")


def _search_piece(f: AffineForm, act, compare: Comparator, label: str) -> int:
    lo, hi = 0, len(act.breakpoints)
    while lo < hi:
        mid = (lo + hi) // 2
        if compare(f, act.breakpoints[mid], label):
            lo = mid + 1
        else:
            hi = mid
    return lo


def comparisons_per_neuron(pieces: int) -> int:
    return max(1, math.ceil(math.log2(pieces)))


def _as_network(net) -> Network:
    return net.to_network() if isinstance(net, ThresholdCircuit) else net


def eval_network_real(net: Network | ThresholdCircuit, p: Partition, x: Sequence[int]) -> tuple[int, Transcript]:
    """Zero-error evaluation; one referee bit per resolved comparison."""
    net = _as_network(net)
    x = _check_binary(x, net.input_dim)
    if p.n != net.input_dim:
        raise DomainError("partition size does not match the network")
    t = Transcript("real")

    def compare(form: AffineForm, threshold: Fraction, label: str) -> bool:
        # Alice: sum over her coordinates; Bob: threshold - bias - sum over his
        alpha = sum((a * x[i] for i, a in enumerate(form.coefficients) if a and i in p.alice), Fraction(0))
        beta = threshold - form.bias - sum((a * x[i] for i, a in enumerate(form.coefficients)
                                            if a and i not in p.alice), Fraction(0))
        bit = t.referee(alpha, beta)
        t.comparisons.append({"neuron": label, "threshold": format_fraction(threshold), "result": bit})
        return bool(bit)

    t.output = _resolve(net, compare)
    return t.output, t


def partition_masks(partitions: Iterable[Partition]) -> np.ndarray:
    """Boolean matrix with one row per partition, ``True`` where Alice owns the coordinate."""
    parts = list(partitions)
    if not parts:
        raise DomainError("no partitions given")
    n = parts[0].n
    if any(p.n != n for p in parts):
        raise DomainError("partitions of different sizes")
    return np.array([[i in p.alice for i in range(n)] for p in parts], dtype=bool)


class _Diverged(Exception):
    pass


def eval_network_real_all(net: Network | ThresholdCircuit, partitions, x: Sequence[int]
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Run the real-model protocol on one input under many partitions at once.

    ``partitions`` is a sequence of :class:`Partition` or a mask matrix from
    :func:`partition_masks`. Every partition gets its own ``alpha``/``beta``
    and referee bit; while all referee bits agree the partitions share the
    walk through the network, and any divergence is replayed one partition at
    a time. Returns ``(outputs, costs)`` with one entry per partition.
    """
    net = _as_network(net)
    x = _check_binary(x, net.input_dim)
    masks = partitions if isinstance(partitions, np.ndarray) else partition_masks(partitions)
    if masks.ndim != 2 or masks.shape[1] != net.input_dim:
        raise DomainError("partition size does not match the network")
    if (masks.all(axis=1) | ~masks.any(axis=1)).any():
        raise DomainError("both players need at least one coordinate")
    calls = 0

    def compare(form: AffineForm, threshold: Fraction, label: str) -> bool:
        nonlocal calls
        coeffs, const = _integer_form(form, threshold)
        contrib = [c * xi for c, xi in zip(coeffs, x)]
        big = sum(abs(v) for v in contrib) + abs(const) >= 1 << 62
        v = np.array(contrib, dtype=object if big else np.int64)
        m = masks.astype(object if big else np.int64)
        alpha = m @ v
        beta = -const - (1 - m) @ v
        bits = alpha > beta
        calls += 1
        if bits.all():
            return True
        if not bits.any():
            return False
        raise _Diverged

    rows = len(masks)
    try:
        out = _resolve(net, compare)
        return np.full(rows, out, dtype=np.int64), np.full(rows, calls, dtype=np.int64)
    except _Diverged:
        outs, costs = np.zeros(rows, dtype=np.int64), np.zeros(rows, dtype=np.int64)
        for r, row in enumerate(masks):
            bit, t = eval_network_real(net, Partition.of(len(row), np.flatnonzero(row).tolist()), x)
            outs[r], costs[r] = bit, t.cost
        return outs, costs


def _pwl_split(net: Network) -> int:
    worst = 1
    for layer in net.layers:
        if layer.activation is not None and layer.activation.kind == "pwl":
            worst = max(worst, comparisons_per_neuron(layer.activation.pieces) + 1)
    return worst


def eval_network_randomized(net: Network | ThresholdCircuit, p: Partition, x: Sequence[int], eps_per_neuron,
                            rnd: SharedRandomness) -> tuple[int, Transcript]:
    """Bounded-error evaluation; each neuron errs with probability at most ``eps_per_neuron``."""
    net = _as_network(net)
    x = _check_binary(x, net.input_dim)
    if p.n != net.input_dim:
        raise DomainError("partition size does not match the network")
    eps = to_fraction(eps_per_neuron) / _pwl_split(net)
    t = Transcript("randomized")

    def compare(form: AffineForm, threshold: Fraction, label: str) -> bool:
        coeffs, const = _integer_form(form, threshold)
        alpha, beta, mag = _split_sums(coeffs, const, p, x)
        result, cost = randomized_gt(alpha, beta, mag.bit_length(), eps, rnd, t)
        t.comparisons.append({"neuron": label, "threshold": format_fraction(threshold),
                              "result": int(result), "bits": cost, "bit_len": mag.bit_length(),
                              "eps": format_fraction(eps)})
        return result

    t.output = _resolve(net, compare)
    return t.output, t


def default_eps_per_neuron(net: Network, eps_total) -> Fraction:
    return to_fraction(eps_total) / (2 * net.size)


def xor_bits(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    return tuple(u ^ v for u, v in zip(a, b))


def ip_self_correct(net_prime: Network, p: Partition, x: Sequence[int], y: Sequence[int],
                    rnd: SharedRandomness, eps_per_neuron) -> tuple[int, Transcript]:
    """Inner product of ``x`` and ``y`` from an average-case-correct network.

    Uses the identity ``IP(x,y) = IP(x+x',y+y') + IP(x+x',y') + IP(x',y+y') + IP(x',y')``
    (mod 2) with public random shifts; the last term is computed locally and
    the other three by :func:`eval_network_randomized`.
    """
    d = len(x)
    if len(y) != d or net_prime.input_dim != 2 * d:
        raise DomainError("net_prime must read two d-bit vectors")
    x = _check_binary(x, d)
    y = _check_binary(y, d)
    xs, ys = rnd.bits(d), rnd.bits(d)
    local = net_prime.evaluate(xs + ys)[0]
    bit = 1 if local > HALF else 0
    combined = Transcript("randomized")
    for u, v in ((xor_bits(x, xs), xor_bits(y, ys)), (xor_bits(x, xs), ys), (xs, xor_bits(y, ys))):
        out, t = eval_network_randomized(net_prime, p, u + v, eps_per_neuron, rnd)
        combined.events.extend(t.events)
        combined.comparisons.extend(t.comparisons)
        bit ^= out
    combined.output = bit
    return bit, combined
