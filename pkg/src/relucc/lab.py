"""Experiment harness: equivalence checks, L2 errors, packing distances,
extractor failure rates, protocol cost sweeps and the end-to-end pipeline.

Every experiment returns an :class:`ExperimentReport` that is a pure
function of its parameters and seed.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .batch import BatchOutput, forward_scaled
from .circuit import ThresholdCircuit, all_inputs, truth_table_to_circuit
from .exactnum import DomainError, FixedPointGrid, format_fraction, sqrt_bounds, to_bits, to_fraction, trunc
from .gadgets import (CORNER_CUBES, UNIFORM_BOOLEAN, UNIFORM_CUBE, CubeDistribution, LiftedFunction,
                      benign_approximator, bit_extractor_deep, bit_extractor_shallow, boolean_gadget,
                      default_delta)
from .network import AffineForm, Network, ONE, ZERO, combine
from .protocols import (SharedRandomness, eval_network_randomized, eval_network_real, gt_cost_bound,
                        sweep_partitions)

MAX_EXHAUSTIVE_BITS = 20
MAX_PIECEWISE_DIM = 3
MAX_SPLIT_DEPTH = 40
MAX_RECORDS = 100
DISTRIBUTIONS = {"uniform_cube": UNIFORM_CUBE, "corner_cubes": CORNER_CUBES, "uniform_boolean": UNIFORM_BOOLEAN}


def _jsonable(v):
    if isinstance(v, Fraction):
        return format_fraction(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, (set, frozenset, tuple)):
        return list(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


@dataclass
class ExperimentReport:
    name: str
    params: dict
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    passed: bool = False

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {"experiment": self.name, "params": self.params, "records": self.records,
                "summary": self.summary, "verdict": self.verdict}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), default=_jsonable, sort_keys=True, indent=2)

    def to_csv(self) -> str:
        keys: list[str] = []
        for r in self.records:
            keys.extend(k for k in r if k not in keys)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for r in self.records:
            writer.writerow({k: json.dumps(v, default=_jsonable) if isinstance(v, (list, dict)) else
                             (_jsonable(v) if isinstance(v, (Fraction, np.generic)) else v)
                             for k, v in r.items()})
        return buf.getvalue()


# evaluation helpers ---------------------------------------------------------

def input_dim(obj) -> int | None:
    if isinstance(obj, (Network, ThresholdCircuit)):
        return obj.input_dim
    if isinstance(obj, LiftedFunction):
        return obj.d
    if isinstance(obj, AffineForm):
        return len(obj.coefficients)
    return None


def _values_from_rows(vals: list) -> BatchOutput:
    rows = [tuple(to_fraction(u) for u in v) if isinstance(v, (tuple, list)) else (to_fraction(v),)
            for v in vals]
    den = 1
    for r in rows:
        for u in r:
            den = math.lcm(den, u.denominator)
    num = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
    for i, r in enumerate(rows):
        for j, u in enumerate(r):
            num[i, j] = u.numerator * (den // u.denominator)
    return BatchOutput(num, den)


def exact_values(obj, X: np.ndarray, den: int) -> BatchOutput:
    """Exact outputs of an evaluable on the batch ``X / den``."""
    if isinstance(obj, Network):
        return forward_scaled(obj, X, den)
    if isinstance(obj, ThresholdCircuit):
        if den != 1:
            Xb = np.asarray(X, dtype=object) // den
            if (Xb * den != np.asarray(X, dtype=object)).any():
                raise DomainError("threshold circuits take Boolean inputs")
            X = Xb
        return BatchOutput(obj.evaluate_all(np.asarray(X, dtype=np.int64)), 1)
    if isinstance(obj, (int, Fraction)):
        return _values_from_rows([obj] * len(X))
    if isinstance(obj, LiftedFunction):
        return _values_from_rows([obj.exact([Fraction(int(v), den) for v in row]) for row in X])
    if callable(obj):
        return _values_from_rows([obj(tuple(Fraction(int(v), den) if den != 1 else int(v) for v in row))
                                  for row in X])
    raise TypeError(f"cannot evaluate {type(obj).__name__}")


def float_values(obj, X: np.ndarray, den: int) -> np.ndarray:
    """First output as floats; exact networks, vectorized closed forms elsewhere."""
    if isinstance(obj, Network):
        return forward_scaled(obj, X, den).floats()[:, 0]
    x = np.asarray(X, dtype=float) / den
    if isinstance(obj, AffineForm):
        return x @ np.array([float(a) for a in obj.coefficients]) + float(obj.bias)
    if isinstance(obj, LiftedFunction):
        z = (x > 0.5).astype(np.int64)
        gap = np.maximum(np.abs(x - z) - 0.25, 0.0)
        dist = np.sqrt((gap * gap).sum(axis=1))
        idx = (z << np.arange(obj.d)).sum(axis=1)
        g = np.array(obj.table, dtype=float)[idx]
        return g * np.maximum(float(obj.height) - float(obj.scale) * dist, 0.0)
    if isinstance(obj, (int, Fraction)):
        return np.full(len(X), float(obj))
    return exact_values(obj, X, den).floats()[:, 0]


def _same(a: BatchOutput, b: BatchOutput) -> np.ndarray:
    an = np.asarray(a.num, dtype=object)
    bn = np.asarray(b.num, dtype=object)
    if an.shape != bn.shape:
        raise DomainError(f"output shapes differ: {an.shape} vs {bn.shape}")
    return (an * b.den == bn * a.den).all(axis=1)


# equivalence ---------------------------------------------------------------

def exhaustive_equivalence(a, b, d: int) -> ExperimentReport:
    """Compare two evaluables on all ``2**d`` Boolean inputs."""
    if d > MAX_EXHAUSTIVE_BITS:
        raise DomainError(f"exhaustive checks are limited to d <= {MAX_EXHAUSTIVE_BITS}")
    X = all_inputs(d)
    same = _same(exact_values(a, X, 1), exact_values(b, X, 1))
    bad = np.flatnonzero(~same)
    records = [{"input": [int(v) for v in X[i]]} for i in bad[:MAX_RECORDS]]
    summary = {"inputs": int(len(X)), "disagreements": int(len(bad))}
    return ExperimentReport("exhaustive_equivalence", {"d": d}, records, summary, len(bad) == 0)


# L2 errors -------------------------------------------------------------------

@dataclass(frozen=True)
class L2Estimate:
    """``||f - g||`` in L2(mu): exact squared norm, or a Monte-Carlo estimate with standard error."""

    squared: Fraction | float
    method: str
    stderr: float = 0.0

    @property
    def exact(self) -> bool:
        return isinstance(self.squared, Fraction)

    @property
    def value(self) -> Fraction | float:
        if self.exact:
            lo, hi = sqrt_bounds(self.squared, 64)
            return lo if lo == hi else math.sqrt(self.squared)
        return math.sqrt(max(self.squared, 0.0))

    def upper(self, bits: int = 64) -> Fraction | float:
        if self.exact:
            return sqrt_bounds(self.squared, bits)[1]
        return self.value

    @property
    def value_stderr(self) -> float:
        """Delta-method standard error of the norm itself."""
        if self.exact:
            return 0.0
        v = self.value
        return self.stderr / (2 * v) if v > 0 else math.sqrt(self.stderr)

    def to_json(self) -> dict:
        return {"method": self.method, "squared": self.squared, "value": self.value,
                "stderr": self.stderr, "value_stderr": self.value_stderr}


Box = tuple[tuple[Fraction, Fraction], ...]


def _corners(box: Box):
    return itertools.product(*box)


def _network_form_on(net: Network, box: Box) -> AffineForm | None:
    """Output form of ``net`` if one activation pattern is valid on the whole box."""
    if net.output_dim != 1:
        raise DomainError("L2 errors need single-output integrands")
    d = net.input_dim
    corners = list(_corners(box))
    forms = [AffineForm.coordinate(d, i) for i in range(d)]
    for layer in net.layers:
        pre = [combine(row, forms, b, d) for row, b in zip(layer.weights, layer.bias)]
        act = layer.activation
        if act is None:
            forms = pre
            continue
        out = []
        for f in pre:
            vals = [f(c) for c in corners]
            p = act.piece(max(vals))
            if p > 0 and min(vals) < act.breakpoints[p - 1]:
                return None
            out.append(f.scale(act.slopes[p]).shift(act.intercepts[p]))
        forms = out
    return forms[0]


def _lift_form_on(lf: LiftedFunction, box: Box) -> AffineForm | None:
    d = lf.d
    z = []
    for lo, hi in box:
        if hi <= Fraction(1, 2):
            z.append(0)
        elif lo >= Fraction(1, 2):
            z.append(1)
        else:
            return None
    gz = lf.g(z)
    if gz == 0:
        return AffineForm.constant(d, ZERO)
    near = Fraction(1, 4)
    radius = lf.height / lf.scale
    sq = ZERO  # squared distance from the box to A_z
    gaps = []  # (coordinate, orientation) where the box lies strictly to one side of A_z
    for i, ((lo, hi), zi) in enumerate(zip(box, z)):
        a_lo, a_hi = zi - near, zi + near
        if lo >= a_lo and hi <= a_hi:
            continue
        if hi <= a_lo:
            gaps.append((i, -1))
            sq += (a_lo - hi) ** 2
        elif lo >= a_hi:
            gaps.append((i, 1))
            sq += (lo - a_hi) ** 2
        else:
            return None
    if sq >= radius * radius:
        return AffineForm.constant(d, ZERO)
    if not gaps:
        return AffineForm.constant(d, gz * lf.height)
    if len(gaps) > 1:
        return None  # Euclidean distance, not affine
    (i, side), = gaps
    lo, hi = box[i]
    far = hi - (z[i] + near) if side > 0 else (z[i] - near) - lo
    if far > radius:
        return None
    # distance is the single gap, affine in x_i
    coeffs = [ZERO] * d
    coeffs[i] = -gz * lf.scale * side
    edge = z[i] + near if side > 0 else z[i] - near
    return AffineForm(tuple(coeffs), gz * (lf.height + lf.scale * side * edge))


def affine_on(obj, box: Box) -> AffineForm | None:
    """An exact affine form of ``obj`` valid on the whole box, or None if none is certified."""
    d = len(box)
    if isinstance(obj, (int, Fraction)):
        return AffineForm.constant(d, obj)
    if isinstance(obj, AffineForm):
        return obj
    if isinstance(obj, Network):
        return _network_form_on(obj, box)
    if isinstance(obj, LiftedFunction):
        return _lift_form_on(obj, box)
    raise DomainError("exact_piecewise needs Network, AffineForm, LiftedFunction or constant integrands")


def network_kinks_1d(net: Network, lo: Fraction, hi: Fraction) -> list[Fraction]:
    """All points in ``(lo, hi)`` where some neuron of a 1-input network changes piece."""
    if net.input_dim != 1:
        raise DomainError("1-D kinks need a 1-input network")
    cells = [(lo, hi, [AffineForm.coordinate(1, 0)])]
    for layer in net.layers:
        act = layer.activation
        nxt = []
        for a, b, forms in cells:
            pre = [combine(row, forms, bias, 1) for row, bias in zip(layer.weights, layer.bias)]
            if act is None:
                nxt.append((a, b, pre))
                continue
            cuts = set()
            for f in pre:
                slope = f.coefficients[0]
                if slope:
                    for c in act.breakpoints:
                        t = (c - f.bias) / slope
                        if a < t < b:
                            cuts.add(t)
            pts = [a, *sorted(cuts), b]
            for u, v in zip(pts, pts[1:]):
                mid = (u + v) / 2
                out = []
                for f in pre:
                    p = act.piece(f((mid,)))
                    out.append(f.scale(act.slopes[p]).shift(act.intercepts[p]))
                nxt.append((u, v, out))
        cells = nxt
    return [a for a, _, _ in cells[1:]]


def _kinks_1d(obj, lo: Fraction, hi: Fraction) -> list[Fraction]:
    if isinstance(obj, Network):
        return network_kinks_1d(obj, lo, hi)
    if isinstance(obj, LiftedFunction):
        r = obj.height / obj.scale  # bump radius around each A_z
        pts = {Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1, 4) + r, Fraction(3, 4) - r}
        return [p for p in pts if lo < p < hi]
    return []


def _box_moments(form: AffineForm, box: Box) -> Fraction:
    """Mean of ``form(x)**2`` for x uniform on the box."""
    center = [(lo + hi) / 2 for lo, hi in box]
    m = form(center)
    return m * m + sum(a * a * (hi - lo) ** 2 for a, (lo, hi) in zip(form.coefficients, box)) / 12


def _integrate(f, g, box: Box, depth: int = 0) -> Fraction:
    """Mean of ``(f - g)**2`` over a box, splitting until both are certified affine."""
    ff, gf = affine_on(f, box), affine_on(g, box)
    if ff is not None and gf is not None:
        return _box_moments(ff + gf.scale(-1), box)
    if depth >= MAX_SPLIT_DEPTH:
        raise DomainError("integrand is not piecewise affine at the reachable resolution")
    k = max(range(len(box)), key=lambda i: box[i][1] - box[i][0])
    lo, hi = box[k]
    mid = (lo + hi) / 2
    left = box[:k] + ((lo, mid),) + box[k + 1:]
    right = box[:k] + ((mid, hi),) + box[k + 1:]
    return (_integrate(f, g, left, depth + 1) + _integrate(f, g, right, depth + 1)) / 2


def _infer_dim(f, g, d):
    for obj in (f, g):
        if d is None:
            d = input_dim(obj)
    if d is None:
        raise DomainError("cannot infer the input dimension; pass d")
    return d


def l2_error(f, g, mu: CubeDistribution | str = UNIFORM_CUBE, method: str = "exact_piecewise", *,
             d: int | None = None, n: int = 100_000, seed: int = 0) -> L2Estimate:
    """``||f - g||_{L2(mu)}`` by exhaustive Boolean averaging, exact cell integration or Monte Carlo."""
    mu = DISTRIBUTIONS[mu] if isinstance(mu, str) else mu
    d = _infer_dim(f, g, d)
    if method == "exact_boolean":
        if mu.kind != "uniform_boolean":
            raise DomainError("exact_boolean integrates the uniform Boolean distribution only")
        if d > MAX_EXHAUSTIVE_BITS:
            raise DomainError(f"exact_boolean is limited to d <= {MAX_EXHAUSTIVE_BITS}")
        X = all_inputs(d)
        a, b = exact_values(f, X, 1), exact_values(g, X, 1)
        total = sum((Fraction(int(u), a.den) - Fraction(int(v), b.den)) ** 2
                    for u, v in zip(a.num[:, 0], b.num[:, 0]))
        return L2Estimate(total / len(X), method)
    if method == "exact_piecewise":
        if d > MAX_PIECEWISE_DIM:
            raise DomainError(f"exact_piecewise is limited to d <= {MAX_PIECEWISE_DIM}")
        boxes = mu.boxes(d)
        total = ZERO
        for box in boxes:
            if d == 1:
                (lo, hi), = box
                pts = sorted({lo, hi, *_kinks_1d(f, lo, hi), *_kinks_1d(g, lo, hi)})
                part = ZERO
                for u, v in zip(pts, pts[1:]):
                    part += _integrate(f, g, ((u, v),)) * (v - u)
                total += part / (hi - lo)
            else:
                total += _integrate(f, g, box)
        return L2Estimate(total / len(boxes), method)
    if method == "monte_carlo":
        rng = np.random.default_rng(seed)
        X, den = mu.sample(rng, n, d)
        diff = float_values(f, X, den) - float_values(g, X, den)
        sq = diff * diff
        return L2Estimate(float(sq.mean()), method, float(sq.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0)
    raise DomainError(f"unknown method {method!r}")


# packing distances -----------------------------------------------------------

def _table(psi, d: int) -> tuple[int, ...]:
    if callable(psi):
        return tuple(int(psi(tuple((i >> k) & 1 for k in range(d)))) for i in range(1 << d))
    t = tuple(int(v) for v in psi)
    if len(t) != 1 << d:
        raise DomainError("sign pattern length must be 2**d")
    return t


def packing_distance_check(d: int, psi, psi2) -> ExperimentReport:
    """Exact squared distance of two quarter-height lifts under the corner-cube distribution."""
    if not 1 <= d <= MAX_PIECEWISE_DIM:
        raise DomainError(f"packing checks need 1 <= d <= {MAX_PIECEWISE_DIM}")
    t1, t2 = _table(psi, d), _table(psi2, d)
    f1 = LiftedFunction(t1, d, "quarter_height")
    f2 = LiftedFunction(t2, d, "quarter_height")
    est = l2_error(f1, f2, CORNER_CUBES, "exact_piecewise", d=d)
    hamming = sum(a != b for a, b in zip(t1, t2))
    formula = Fraction(hamming, 16 * (1 << d))
    rec = {"hamming": hamming, "distance_sq": est.squared, "formula": formula, "distance": est.value}
    return ExperimentReport("packing_distance_check", {"d": d, "psi": list(t1), "psi_prime": list(t2)},
                            [rec], {"equal": est.squared == formula}, est.squared == formula)


# extractor failures ------------------------------------------------------------

def _expected_bits(X: np.ndarray, den: int, c: int) -> np.ndarray:
    """``bin(trunc(x))`` per coordinate, LSB first, concatenated; exact integer arithmetic."""
    Xo = np.asarray(X, dtype=object)
    j = (Xo * (1 << c)) // den
    j = np.minimum(j, (1 << c) - 1).astype(np.int64)
    bits = (j[:, :, None] >> np.arange(c, dtype=np.int64)) & 1
    return bits.reshape(len(X), -1)


def binomial_margin(p: float, n: int, z: float = 2.0) -> float:
    return z * math.sqrt(max(p * (1 - p), 0.0) / n) if n else 0.0


def extractor_failure_rate(c: int, d: int = 1, *, delta=None, extractor: str = "shallow",
                           mu: CubeDistribution | str = UNIFORM_CUBE, n: int = 100_000, seed: int = 0,
                           target: float = 0.01, inputs: Sequence[Sequence] | None = None) -> ExperimentReport:
    """Fraction of inputs where the extractor output differs from ``bin(trunc(x))`` in any bit."""
    mu = DISTRIBUTIONS[mu] if isinstance(mu, str) else mu
    delta = default_delta(c) if delta is None else to_fraction(delta)
    build = {"shallow": bit_extractor_shallow, "deep": bit_extractor_deep}.get(extractor)
    if build is None:
        raise DomainError(f"unknown extractor {extractor!r}")
    net = build(c, delta, d)
    if inputs is not None:
        fr = [[to_fraction(v) for v in row] for row in inputs]
        den = 1
        for row in fr:
            for v in row:
                den = math.lcm(den, v.denominator)
        X = np.array([[int(v * den) for v in row] for row in fr], dtype=object)
        if den < 1 << 62 and all(abs(int(v)) < 1 << 62 for v in X.ravel()):
            X = X.astype(np.int64)
    else:
        X, den = mu.sample(np.random.default_rng(seed), n, d)
    out = forward_scaled(net, X, den)
    want = _expected_bits(X, den, c)
    ok = (np.asarray(out.num, dtype=object) == want.astype(object) * out.den).all(axis=1)
    bad = np.flatnonzero(~ok)
    m = len(X)
    rate = len(bad) / m if m else 0.0
    margin = binomial_margin(target, m)
    records = [{"input": [format_fraction(Fraction(int(v), den)) for v in X[i]]} for i in bad[:MAX_RECORDS]]
    summary = {"samples": m, "failures": int(len(bad)), "rate": rate, "target": target, "margin": margin,
               "per_coordinate_strip_mass": delta}
    params = {"c": c, "d": d, "delta": delta, "extractor": extractor, "mu": mu.kind,
              "n": m, "seed": seed, "explicit_inputs": inputs is not None}
    return ExperimentReport("extractor_failure_rate", params, records, summary, rate <= target + margin)


# protocol cost sweeps --------------------------------------------------------------

def fit_log_exponent(ds: Sequence[int], per_neuron: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``per_neuron = C * (log2 d)**b``; returns ``(b, C)``."""
    x = np.log(np.log2(np.asarray(ds, dtype=float)))
    y = np.log(np.asarray(per_neuron, dtype=float))
    b, logc = np.polyfit(x, y, 1)
    return float(b), float(math.exp(logc))


def cost_sweep(model: str, kind: str, ds: Sequence[int], *, eps=None, partitions: int = 100,
               exhaustive_up_to: int = 8, seed: int = 0,
               exponent_range: tuple[float, float] = (0.7, 1.3)) -> ExperimentReport:
    """Worst observed protocol cost over partitions for gadget networks of growing size.

    ``eps`` is the per-neuron error of the randomized model; the default
    ``d**-2`` is the per-neuron budget that makes a union bound over ``O(d)``
    neurons vanish. The real model must cost exactly the network size.
    """
    if model not in ("real", "randomized"):
        raise DomainError(f"unknown model {model!r}")
    rng = np.random.default_rng(seed)
    records = []
    ok = True
    for d in ds:
        net = boolean_gadget(kind, d)
        n_in = net.input_dim
        e = Fraction(1, d * d) if eps is None else to_fraction(eps)
        worst, errors, bound_ok, runs = 0, 0, True, 0
        for k, p in enumerate(sweep_partitions(n_in, rng, exhaustive_up_to, partitions)):
            x = tuple(int(v) for v in rng.integers(0, 2, n_in))
            truth = 1 if net.scalar(x) > Fraction(1, 2) else 0
            if model == "real":
                out, t = eval_network_real(net, p, x)
                bound_ok &= t.cost == net.size
            else:
                out, t = eval_network_randomized(net, p, x, e, SharedRandomness(seed * 1_000_003 + k))
                bound_ok &= all(cmp["bits"] <= gt_cost_bound(cmp["bit_len"], Fraction(cmp["eps"]))
                                for cmp in t.comparisons)
            errors += out != truth
            worst = max(worst, t.cost)
            runs += 1
        rec = {"d": d, "size": net.size, "partitions": runs, "max_cost": worst,
               "cost_per_neuron": worst / net.size, "errors": errors, "bound_ok": bool(bound_ok)}
        if model == "randomized":
            rec["eps_per_neuron"] = e
        records.append(rec)
        ok &= bound_ok
        if model == "real":
            ok &= errors == 0
    summary: dict[str, Any] = {"model": model}
    if model == "randomized" and len(ds) >= 2:
        b, C = fit_log_exponent([r["d"] for r in records], [r["cost_per_neuron"] for r in records])
        summary.update({"log_exponent": b, "constant": C, "exponent_range": list(exponent_range)})
        ok &= exponent_range[0] <= b <= exponent_range[1]
    params = {"model": model, "kind": kind, "ds": list(ds), "eps": eps, "partitions": partitions,
              "exhaustive_up_to": exhaustive_up_to, "seed": seed}
    return ExperimentReport("cost_sweep", params, records, summary, bool(ok))


# end-to-end pipeline -------------------------------------------------------------

def grid_table(f: Callable, d: int, c: int) -> list[tuple[int, ...]]:
    """Truth table of ``bin(trunc(f(real(x_hat))))`` over all ``c*d``-bit inputs."""
    if c * d > 16:
        raise DomainError("pipeline truth tables are limited to c*d <= 16")
    g = FixedPointGrid(c)
    mask = (1 << c) - 1
    table = []
    for idx in range(1 << (c * d)):
        x = tuple(Fraction((idx >> (i * c)) & mask, g.size) for i in range(d))
        y = to_fraction(f(x) if callable(f) else f)
        if not 0 <= y <= 1:
            raise DomainError(f"f must map into [0, 1]; got {y} at {x}")
        table.append(to_bits(trunc(y, g), g))
    return table


def _sqrt_lo(q: Fraction) -> Fraction:
    return sqrt_bounds(q, 64)[0]


def pipeline_check(f: Callable, d: int, c: int, *, delta=None, mu: CubeDistribution | str = UNIFORM_CUBE,
                   method: str | None = None, n: int = 100_000, seed: int = 0, lipschitz=1,
                   extractor: str = "shallow") -> ExperimentReport:
    """Build the approximator for the grid version of ``f`` and compare its error to the bound.

    Bound: ``L*sqrt(d)*2**-c`` (input truncation) + ``2**-c`` (output
    truncation) + ``sqrt(failure mass)`` (extraction strips, where the error
    is at most 1).
    """
    mu = DISTRIBUTIONS[mu] if isinstance(mu, str) else mu
    delta = default_delta(c) if delta is None else to_fraction(delta)
    tc = truth_table_to_circuit(grid_table(f, d, c), c * d)
    net = benign_approximator(tc, c, d, delta, extractor)
    if method is None:
        method = "exact_piecewise" if d == 1 else "monte_carlo"
    L = to_fraction(lipschitz)
    step = Fraction(1, 1 << c)
    density = {"uniform_cube": 1, "corner_cubes": 2}.get(mu.kind)
    if density is None:
        raise DomainError("pipeline_check needs a distribution with a density")
    mass = d * delta * density * (c if extractor == "deep" else 1)
    terms = {"input_truncation": float(L * step) * math.sqrt(d), "output_truncation": float(step),
             "strip": math.sqrt(mass)}
    bound = sum(terms.values())
    est = l2_error(f, net, mu, method, d=d, n=n, seed=seed)
    if est.exact:
        # rigorous: upper bound on the error against a lower bound on the bound
        bound_lo = L * step * _sqrt_lo(Fraction(d)) + step + _sqrt_lo(mass)
        passed = est.upper() <= bound_lo
        margin = 0.0
    else:
        margin = 2 * est.value_stderr
        passed = est.value <= bound + margin
    rec = {"error": est.value, "error_squared": est.squared, "stderr": est.value_stderr, "bound": bound,
           "margin": margin, **terms}
    params = {"d": d, "c": c, "delta": delta, "mu": mu.kind, "method": method, "n": n, "seed": seed,
              "lipschitz": L, "extractor": extractor}
    summary = {"network_size": net.size, "network_depth": net.depth, "circuit_size": tc.size,
               "failure_mass": mass}
    return ExperimentReport("pipeline_check", params, [rec], summary, bool(passed))
