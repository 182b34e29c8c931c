import json
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relucc.exactnum import DomainError
from relucc.gadgets import binary_decoder, boolean_gadget, phi
from relucc.network import (RELU, SIGN, Activation, AffineForm, Network, compose, identity_network, juxtapose,
                            network, piecewise_linear)

AND = network(2, [([[1, 1]], [-1], RELU)])


def test_evaluate_examples():
    single = network(1, [([[1]], [-1], RELU)])
    assert single.evaluate([2]) == (1,)
    assert AND.evaluate([1, 1]) == (1,)
    assert AND.evaluate([1, 0]) == (0,)
    with pytest.raises(DomainError):
        AND.evaluate([1])


def test_activation_pattern_examples():
    assert AND.activation_pattern([1, 1]) == (1,)
    assert AND.activation_pattern([0, 0]) == (0,)
    disj = boolean_gadget("DISJ", 2)
    assert disj.activation_pattern([1, 1, 1, 1])[:2] == (1, 1)


def test_collapse_examples():
    (f,) = AND.collapse_to_affine((1,))
    assert f.coefficients == (1, 1) and f.bias == -1
    (g,) = AND.collapse_to_affine((0,))
    assert g.is_zero()
    step = network(1, [([[1], [1]], [0, -1], RELU), ([[1, -1]], [0], None)])
    (h,) = step.collapse_to_affine((1, 0))
    assert h.coefficients == (1,) and h.bias == 0
    with pytest.raises(DomainError):
        step.collapse_to_affine((1,))


def test_compose_examples():
    n = boolean_gadget("DISJ", 2)
    ident = identity_network(1)
    c = compose(ident, n)
    for x in np.ndindex(2, 2, 2, 2):
        assert c.evaluate(x) == n.evaluate(x)
    phi2 = compose(phi(), phi())
    assert phi2.evaluate([F(1, 4)]) == (1,)
    emit = network(1, [([[0], [0]], [1, 0], None)])
    assert compose(binary_decoder(2), emit).evaluate([0]) == (F(1, 4),)
    with pytest.raises(DomainError):
        compose(binary_decoder(3), emit)


def test_compose_merges_linear_layers():
    phi2 = compose(phi(), phi())
    assert phi2.depth == 3  # two ReLU layers, one linear output


def test_juxtapose_examples():
    assert juxtapose([AND]).evaluate([1, 1]) == (1,)
    j = juxtapose([AND, AND])
    assert j.evaluate([1, 1, 1, 0]) == (1, 0)
    assert j.size == 2 * AND.size
    with pytest.raises(DomainError):
        juxtapose([])


def test_sign_activation():
    assert SIGN.apply(F(0)) == 0
    assert SIGN.apply(F(1, 10 ** 9)) == 1
    assert RELU.apply(F(-3)) == 0 and RELU.apply(F(5, 2)) == F(5, 2)


def test_pwl_pieces_left_open():
    act = piecewise_linear([0, 1], [0, 1, 0], [0, 0, 1])
    assert act.pieces == 3
    assert act.piece(F(0)) == 0
    assert act.piece(F(1)) == 1
    assert act.piece(F(3, 2)) == 2
    assert act.apply(F(1, 2)) == F(1, 2) and act.apply(F(7)) == 1
    with pytest.raises(DomainError):
        piecewise_linear([1, 0], [0, 1, 0], [0, 0, 1])


def test_size_depth_bookkeeping():
    disj = boolean_gadget("DISJ", 3)
    assert disj.size == 4 and disj.depth == 2
    assert AND.size == 1 and AND.depth == 1


def test_json_round_trip():
    act = piecewise_linear([F(-1, 3), F(2, 7)], [0, 1, F(1, 2)], [F(1, 3), 0, F(1, 7)])
    net = network(2, [([[F(1, 3), 2], [-1, F(5, 9)]], [F(-1, 2), 0], act), ([[1, -1]], [F(1, 11)], None)],
                  gadget="test")
    text = net.dumps()
    back = Network.from_json(json.loads(text))
    assert back == net
    assert back.dumps() == text
    assert json.loads(text)["layers"][0]["weights"][0][0] == "1/3"


def random_net(rng, d, pwl=False):
    layers = []
    fan_in = d
    for k in range(int(rng.integers(1, 4))):
        w = int(rng.integers(1, 5))
        rows = [[F(int(rng.integers(-4, 5)), int(rng.integers(1, 4))) for _ in range(fan_in)] for _ in range(w)]
        bias = [F(int(rng.integers(-4, 5)), int(rng.integers(1, 4))) for _ in range(w)]
        act = RELU
        if pwl and rng.random() < 0.5:
            act = piecewise_linear([-1, 0, F(1, 2)], [F(1, 2), 0, 1, -2], [0, F(-1, 2), 0, F(3, 2)])
        layers.append((rows, bias, act))
        fan_in = w
    layers.append(([[F(int(rng.integers(-3, 4))) for _ in range(fan_in)]], [0], None))
    return network(d, layers)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.booleans())
def test_collapse_soundness(seed, pwl):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    net = random_net(rng, d, pwl)
    x = [F(int(rng.integers(-20, 21)), int(rng.integers(1, 8))) for _ in range(d)]
    forms = net.collapse_to_affine(net.activation_pattern(x))
    assert tuple(f(x) for f in forms) == net.evaluate(x)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_compose_juxtapose_pointwise(seed):
    rng = np.random.default_rng(seed)
    inner = random_net(rng, 2)
    outer = random_net(rng, 1)
    both = juxtapose([inner, outer])
    c = compose(outer, inner)
    for _ in range(5):
        x = [F(int(rng.integers(-10, 11)), 3) for _ in range(3)]
        assert c.evaluate(x[:2]) == outer.evaluate(inner.evaluate(x[:2]))
        assert both.evaluate(x) == inner.evaluate(x[:2]) + outer.evaluate(x[2:])


def test_affine_form_ops():
    f = AffineForm((F(1), F(2)), F(3))
    assert f([1, 1]) == 6
    assert f.scale(2)([1, 1]) == 12
    assert f.shift(-6)([1, 1]) == 0
    assert (f + f)([0, 0]) == 6
    assert AffineForm.constant(2, 5)([9, 9]) == 5


def test_activation_json():
    assert Activation.from_json({"kind": "relu"}) == RELU
    assert Activation.from_json("linear") is None
