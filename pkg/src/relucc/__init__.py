"""Exact ReLU-network and threshold-circuit constructions, compilers,
communication-protocol simulators and verification experiments."""

__version__ = "0.1.0"

from .exactnum import (DomainError, FixedPointGrid, decode_vector, encode_vector, format_fraction, from_bits,
                       parse_fraction, to_bits, to_fraction, trunc)
from .network import (RELU, SIGN, Activation, AffineForm, Layer, Network, compose, identity_network, juxtapose,
                      network, piecewise_linear)
from .circuit import (LTF, ThresholdCircuit, add_selector, circuit, compile_to_relu, evaluate_circuit, hardwire,
                      truth_table_to_circuit)
from .batch import backend, evaluate_batch
from .gadgets import (CORNER_CUBES, UNIFORM_BOOLEAN, UNIFORM_CUBE, CubeDistribution, LiftedFunction,
                      agreement_network, benign_approximator, binary_decoder, bit_extractor_deep,
                      bit_extractor_shallow, boolean_gadget, lipschitz_lift, rounding_layer, sawtooth,
                      threshold_output)
from .protocols import (Partition, SharedRandomness, Transcript, eval_network_randomized, eval_network_real,
                        eval_network_real_all, partition_masks,
                        evaluate_ltf_randomized, evaluate_ltf_real, ip_self_correct, randomized_gt)
