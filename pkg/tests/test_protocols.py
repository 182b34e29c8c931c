import itertools
import json
import math
from fractions import Fraction as F

import numpy as np
import pytest

from relucc.circuit import LTF, circuit
from relucc.exactnum import DomainError
from relucc.gadgets import boolean_gadget, boolean_oracle, corrupted_network, ip, random_points
from relucc.network import network, piecewise_linear
from relucc.protocols import (GT_COST_CONSTANT, MAX_PIECES, Partition, SharedRandomness, all_partitions,
                              eval_network_randomized, eval_network_real, evaluate_ltf_randomized,
                              evaluate_ltf_real, gt_cost_bound, ip_self_correct, random_partitions,
                              randomized_gt, xor_bits)


def test_partition_validation_and_parsing():
    p = Partition.parse("ABBA")
    assert p.alice == {0, 3} and p.bob == {1, 2} and p.spec() == "ABBA"
    assert Partition.parse("0,2", 4).alice == {0, 2}
    with pytest.raises(DomainError):
        Partition.parse("AAAA")
    with pytest.raises(DomainError):
        Partition.of(3, [5])
    with pytest.raises(DomainError):
        Partition.parse("1,2")
    assert len(list(all_partitions(4))) == 14
    parts = random_partitions(np.random.default_rng(0), 10, 20)
    assert all(p.alice and p.bob for p in parts)


def test_shared_randomness_replayable():
    a, b = SharedRandomness(42), SharedRandomness(42)
    assert [a.getrandbits(20) for _ in range(5)] == [b.getrandbits(20) for _ in range(5)]
    assert a.bits(8) == b.bits(8)


def test_gt_examples():
    for seed in range(100):
        assert randomized_gt(5, 3, 4, F(1, 1000), SharedRandomness(seed))[0] is True
    assert randomized_gt(7, 7, 4, F(1, 20), SharedRandomness(0))[0] is False
    with pytest.raises(DomainError):
        randomized_gt(1, 0, 0, F(1, 20), SharedRandomness(0))
    with pytest.raises(DomainError):
        randomized_gt(16, 0, 4, F(1, 20), SharedRandomness(0))


def test_gt_error_rate():
    eps = F(1, 20)
    rng = np.random.default_rng(0)
    errors = 0
    n = 10_000
    for seed in range(n):
        a, b = (int(v) for v in rng.integers(-200, 200, 2))
        if rng.random() < 0.5:
            b = a + int(rng.integers(-1, 2))  # adjacent values are the hard case
        got, cost = randomized_gt(a, b, 8, eps, SharedRandomness(seed))
        errors += got != (a > b)
        assert cost <= gt_cost_bound(8, eps)
    assert errors / n <= 0.05


def test_gt_cost_constant():
    for n in range(1, 3000, 7):
        for inv in (2, 3, 10, 1000, 10 ** 6):
            bound = GT_COST_CONSTANT * math.log2(n + 2) * math.log2((n + 2) * inv)
            assert gt_cost_bound(n, F(1, inv)) <= bound


def test_ltf_randomized_examples():
    maj = LTF.make([1, 1, 1], -1)
    for p in all_partitions(3):
        assert evaluate_ltf_randomized(maj, p, (1, 1, 0), F(1, 100), SharedRandomness(1))[0] == 1
    single = LTF.make([1, 0], 0)
    bit, cost = evaluate_ltf_randomized(single, Partition.of(2, [0]), (1, 0), F(1, 100), SharedRandomness(2))
    assert bit == 1 and cost <= gt_cost_bound(1, F(1, 100))
    with pytest.raises(DomainError):
        evaluate_ltf_randomized(maj, Partition.of(3, [0]), (1, 2, 0), F(1, 100), SharedRandomness(0))


def test_ltf_cost_grows_logarithmically():
    eps = F(1, 100)
    ms = [2 ** k for k in range(4, 15, 2)]
    costs = []
    for m in ms:
        ltf = LTF.make([1] * m, -(m // 2))
        p = Partition.of(m, range(m // 2))
        x = tuple([1, 0] * (m // 2))
        worst = max(evaluate_ltf_randomized(ltf, p, x, eps, SharedRandomness(s))[1] for s in range(5))
        costs.append(worst)
        assert worst <= gt_cost_bound(m.bit_length(), eps)
    slope, _ = np.polyfit(np.log2(ms), costs, 1)
    # bits per doubling of m stay small; linear growth would be astronomically larger
    assert slope < 10 and costs[-1] <= 3 * costs[0]


def test_ltf_real_examples():
    and_gate = LTF.make([1, 1], -1)
    for p in all_partitions(2):
        assert evaluate_ltf_real(and_gate, p, (1, 1)) == (1, 1)
        assert evaluate_ltf_real(and_gate, p, (1, 0)) == (0, 1)


def test_ltf_real_random():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        m = int(rng.integers(2, 9))
        ltf = LTF.make(rng.integers(-5, 6, m).tolist(), int(rng.integers(-5, 6)))
        x = tuple(int(v) for v in rng.integers(0, 2, m))
        p = random_partitions(rng, m, 1)[0]
        bit, cost = evaluate_ltf_real(ltf, p, x)
        assert cost == 1 and bit == ltf(x)


def _partitions_for(n):
    return [Partition.split(n), Partition.parse("AB" * (n // 2)), Partition.of(n, [0])]


@pytest.mark.parametrize("kind", ["DISJ", "IP"])
def test_randomized_network_exhaustive_d4(kind):
    net = boolean_gadget(kind, 4)
    oracle = boolean_oracle(kind, 4)
    for k, p in enumerate(_partitions_for(8)):
        for x in itertools.product((0, 1), repeat=8):
            out, t = eval_network_randomized(net, p, x, F(1, 1000), SharedRandomness(k * 1000 + sum(x)))
            assert out == oracle(x)


def test_real_network_examples():
    disj = boolean_gadget("DISJ", 2)
    for p in all_partitions(4):
        for x in itertools.product((0, 1), repeat=4):
            out, t = eval_network_real(disj, p, x)
            assert out == boolean_oracle("DISJ", 2)(x) and t.cost == 3
    g = LTF.make([2, -1, 1], -1)
    tc = circuit(3, [[g]])
    for x in itertools.product((0, 1), repeat=3):
        out, t = eval_network_real(tc, Partition.of(3, [0]), x)
        assert t.cost == 1 and out == g(x)


def test_real_network_ip4_all_inputs():
    net = boolean_gadget("IP", 4)
    oracle = boolean_oracle("IP", 4)
    for p in _partitions_for(8):
        for x in itertools.product((0, 1), repeat=8):
            out, t = eval_network_real(net, p, x)
            assert out == oracle(x) and t.cost == net.size


def test_pwl_network_binary_search():
    act = piecewise_linear([0, 1, 2], [0, 1, 0, 1], [0, 0, 1, -1])
    net = network(3, [([[1, 1, 1], [1, -1, 1]], [0, 0], act), ([[1, -1]], [F(1, 4)], None)])
    for p in all_partitions(3):
        for x in itertools.product((0, 1), repeat=3):
            want = 1 if net.scalar(x) > F(1, 2) else 0
            out, t = eval_network_real(net, p, x)
            assert out == want
            # two comparisons per 4-piece neuron, one at the output
            assert t.cost == 2 * 2 + 1
            assert eval_network_randomized(net, p, x, F(1, 10 ** 6), SharedRandomness(sum(x)))[0] == want


def test_network_protocol_errors():
    two_out = network(2, [([[1, 0], [0, 1]], [0, 0], None)])
    with pytest.raises(DomainError):
        eval_network_real(two_out, Partition.of(2, [0]), (1, 0))
    net = boolean_gadget("AND", 2)
    with pytest.raises(DomainError):
        eval_network_real(net, Partition.of(2, [0]), (1, 3))
    with pytest.raises(DomainError):
        eval_network_real(net, Partition.of(3, [0]), (1, 0))
    huge = piecewise_linear(list(range(3)), [0] * 4, [0] * 4)
    assert huge.pieces <= MAX_PIECES


def test_transcript_determinism():
    net = boolean_gadget("IP", 3)
    p = Partition.parse("ABABAB")
    x = (1, 0, 1, 1, 1, 0)
    runs = [json.dumps(eval_network_randomized(net, p, x, F(1, 1000), SharedRandomness(9))[1].to_json())
            for _ in range(2)]
    assert runs[0] == runs[1]
    t = json.loads(runs[0])
    assert t["cost"] == sum(1 for e in t["events"] if "bit" in e)
    assert all(e["speaker"] in ("alice", "bob") for e in t["events"])


def test_real_transcript_fields():
    _, t = eval_network_real(boolean_gadget("DISJ", 2), Partition.parse("AABB"), (1, 0, 1, 0))
    data = t.to_json()
    assert data["cost"] == len(data["events"]) == 3
    assert all({"alpha", "beta", "bit"} <= set(e) for e in data["events"])


def test_ip_identity():
    rng = np.random.default_rng(0)
    for _ in range(100_000 // 10):
        x, y, xs, ys = (tuple(int(v) for v in rng.integers(0, 2, 8)) for _ in range(4))
        lhs = ip(xor_bits(x, xs), xor_bits(y, ys)) ^ ip(xor_bits(x, xs), ys) ^ ip(xs, xor_bits(y, ys)) ^ ip(xs, ys)
        assert lhs == ip(x, y)


def test_ip_self_correct_exact_network():
    d = 8
    net = boolean_gadget("IP", d)
    p = Partition.split(2 * d)
    for seed in range(100):
        rnd = SharedRandomness(seed)
        x, y = rnd.bits(d), rnd.bits(d)
        assert ip_self_correct(net, p, x, y, SharedRandomness(10 ** 6 + seed), F(1, 10 ** 6))[0] == ip(x, y)
    zero = (0,) * d
    for seed in range(20):
        y = SharedRandomness(seed).bits(d)
        assert ip_self_correct(net, p, zero, y, SharedRandomness(seed), F(1, 10 ** 6))[0] == 0


def test_ip_self_correct_repairs_corruption():
    d = 4
    rng = np.random.default_rng(0)
    pts = random_points(rng, 2 * d, 2)
    net = corrupted_network(boolean_gadget("IP", d), pts)
    p = Partition.split(2 * d)
    errors = 0
    trials = 400
    for seed in range(trials):
        rnd = SharedRandomness(seed)
        x, y = rnd.bits(d), rnd.bits(d)
        errors += ip_self_correct(net, p, x, y, rnd, F(1, 10 ** 5))[0] != ip(x, y)
    rho = len(pts) / 2 ** (2 * d)
    budget = 3 * net.size * 1e-5
    assert errors / trials <= 4 * rho + budget + 2 * math.sqrt(4 * rho / trials)
    with pytest.raises(DomainError):
        ip_self_correct(net, p, (0,) * 3, (0,) * 4, SharedRandomness(0), F(1, 100))


def test_real_all_partitions_matches_single_runs():
    from relucc.protocols import eval_network_real_all, partition_masks
    net = boolean_gadget("DISJ", 2)
    parts = list(all_partitions(4))
    masks = partition_masks(parts)
    for x in itertools.product((0, 1), repeat=4):
        outs, costs = eval_network_real_all(net, masks, x)
        for p, o, c in zip(parts, outs, costs):
            bit, t = eval_network_real(net, p, x)
            assert (o, c) == (bit, t.cost)
    with pytest.raises(DomainError):
        eval_network_real_all(net, masks[:, :3], (0, 0, 0, 0))
