"""Command-line interface: ``relucc gadget ...``, ``relucc protocol ...``, ``relucc lab ...``."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .circuit import ThresholdCircuit, compile_to_relu, truth_table_to_circuit
from .exactnum import DomainError, to_fraction
from .gadgets import (GADGET_KINDS, CubeDistribution, agreement_network, binary_decoder, bit_extractor_deep,
                      bit_extractor_shallow, boolean_gadget, boolean_oracle, rounding_layer, sawtooth,
                      threshold_output)
from .lab import (DISTRIBUTIONS, ExperimentReport, cost_sweep, exhaustive_equivalence, extractor_failure_rate,
                  l2_error, packing_distance_check, pipeline_check)
from .network import AffineForm, Network
from .protocols import Partition, SharedRandomness, eval_network_randomized, eval_network_real

CONSTRUCTIONS = {
    "sawtooth": "sawtooth composition: phi^j has 2^(j-1) unit-height teeth",
    "extractor": "bit extraction: x -> bin(trunc(x)) off the failure strips",
    "boolean": "Boolean gadgets of size O(d)",
    "threshold": "output thresholding [3N-1]_+ - [3N-2]_+",
    "decoder": "binary decoder bits -> real",
    "rounding": "coordinate rounding layer",
    "agreement": "rounding composed with a Boolean network",
    "compile": "threshold circuit to ReLU network compilation",
    "truth-table": "depth-2 threshold circuit from a truth table",
}


def _emit(obj, construction: str, params: dict, out: str | None) -> None:
    doc = {
        "provenance": {"tool": f"relucc {__version__}", "construction": CONSTRUCTIONS[construction],
                       "command": construction, "params": params},
        "network": obj.to_json(),
    }
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)


def load_network(path: str) -> Network:
    data = json.loads(Path(path).read_text())
    if "network" in data:
        data = data["network"]
    return Network.from_json(data)


def load_circuit(path: str) -> ThresholdCircuit:
    data = json.loads(Path(path).read_text())
    if "network" in data:
        data = data["network"]
    return ThresholdCircuit.from_json(data)


def parse_bits(text: str) -> tuple[int, ...]:
    s = text.replace(",", "").replace(" ", "")
    if not s or set(s) - {"0", "1"}:
        raise click.BadParameter(f"expected a 0/1 string, got {text!r}")
    return tuple(int(ch) for ch in s)


@click.group()
@click.version_option(__version__)
def main():
    """Exact ReLU-network constructions, protocol simulation and experiments."""


# gadgets ----------------------------------------------------------------------

@main.group()
def gadget():
    """Emit a constructed network as JSON with a provenance header."""


_out = click.option("--out", type=click.Path(dir_okay=False), help="Write to a file instead of stdout.")


@gadget.command("sawtooth")
@click.option("--j", "j", type=int, required=True)
@_out
def gadget_sawtooth(j, out):
    _emit(sawtooth(j), "sawtooth", {"j": j}, out)


@gadget.command("extractor")
@click.option("--c", "c", type=int, required=True)
@click.option("--delta", default=None, help="Strip width, e.g. 1/64.")
@click.option("--d", "d", type=int, default=1)
@click.option("--deep", is_flag=True, help="Use the sawtooth-based extractor.")
@_out
def gadget_extractor(c, delta, d, deep, out):
    build = bit_extractor_deep if deep else bit_extractor_shallow
    _emit(build(c, delta, d), "extractor", {"c": c, "delta": delta, "d": d, "deep": deep}, out)


@gadget.command("boolean")
@click.option("--kind", type=click.Choice(GADGET_KINDS), required=True)
@click.option("--d", "d", type=int, required=True)
@_out
def gadget_boolean(kind, d, out):
    _emit(boolean_gadget(kind, d), "boolean", {"kind": kind, "d": d}, out)


@gadget.command("threshold")
@click.option("--net", "net_path", type=click.Path(exists=True, dir_okay=False), required=True)
@_out
def gadget_threshold(net_path, out):
    _emit(threshold_output(load_network(net_path)), "threshold", {"net": net_path}, out)


@gadget.command("decoder")
@click.option("--c", "c", type=int, required=True)
@_out
def gadget_decoder(c, out):
    _emit(binary_decoder(c), "decoder", {"c": c}, out)


@gadget.command("rounding")
@click.option("--d", "d", type=int, required=True)
@_out
def gadget_rounding(d, out):
    _emit(rounding_layer(d), "rounding", {"d": d}, out)


@gadget.command("agreement")
@click.option("--net", "net_path", type=click.Path(exists=True, dir_okay=False), required=True)
@_out
def gadget_agreement(net_path, out):
    _emit(agreement_network(load_network(net_path)), "agreement", {"net": net_path}, out)


@gadget.command("compile")
@click.option("--circuit", "circuit_path", type=click.Path(exists=True, dir_okay=False), required=True)
@_out
def gadget_compile(circuit_path, out):
    _emit(compile_to_relu(load_circuit(circuit_path)), "compile", {"circuit": circuit_path}, out)


@gadget.command("truth-table")
@click.option("--table", required=True, help="Output bits in index order, e.g. 0110 for XOR.")
@_out
def gadget_truth_table(table, out):
    _emit(truth_table_to_circuit(parse_bits(table)), "truth-table", {"table": table}, out)


# protocols ---------------------------------------------------------------------

@main.group()
def protocol():
    """Two-party evaluation of networks and cost sweeps."""


@protocol.command("run")
@click.option("--model", type=click.Choice(["randomized", "real"]), required=True)
@click.option("--net", "net_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--partition", "spec", required=True, help="Owner per coordinate (AABB) or Alice's indices (0,1).")
@click.option("--input", "bits", required=True, help="Input bits, e.g. 1010.")
@click.option("--seed", type=int, default=0)
@click.option("--eps", default="1/1000", help="Per-neuron error of the randomized model.")
def protocol_run(model, net_path, spec, bits, seed, eps):
    net = load_network(net_path)
    x = parse_bits(bits)
    try:
        p = Partition.parse(spec, net.input_dim)
        if model == "real":
            _, t = eval_network_real(net, p, x)
        else:
            _, t = eval_network_randomized(net, p, x, to_fraction(eps), SharedRandomness(seed))
    except DomainError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(t.to_json(), indent=2))


@protocol.command("sweep")
@click.option("--model", type=click.Choice(["randomized", "real"]), required=True)
@click.option("--kind", type=click.Choice(GADGET_KINDS), default="DISJ")
@click.option("--ds", default="8,16,32,64", help="Comma-separated gadget sizes.")
@click.option("--eps", default=None, help="Per-neuron error; default d^-2.")
@click.option("--partitions", type=int, default=100)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), help="CSV file (stdout by default).")
def protocol_sweep(model, kind, ds, eps, partitions, seed, out):
    report = cost_sweep(model, kind, [int(v) for v in ds.split(",")], eps=eps,
                        partitions=partitions, seed=seed)
    text = report.to_csv()
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)
    sys.exit(0 if report.passed else 1)


# experiments ---------------------------------------------------------------------

def evaluable(spec):
    """Build an evaluable from a params entry.

    Accepted forms: a number or "p/q" string (constant); ``{"net": FILE}``;
    ``{"circuit": FILE}``; ``{"gadget": KIND, "d": D}``; ``{"oracle": KIND, "d": D}``;
    ``{"affine": [coefficients...], "bias": b}``.
    """
    if isinstance(spec, (int, str)):
        return to_fraction(spec)
    if "net" in spec:
        return load_network(spec["net"])
    if "circuit" in spec:
        return load_circuit(spec["circuit"])
    if "gadget" in spec:
        return boolean_gadget(spec["gadget"], int(spec["d"]))
    if "oracle" in spec:
        return boolean_oracle(spec["oracle"], int(spec["d"]))
    if "affine" in spec:
        return AffineForm(tuple(to_fraction(v) for v in spec["affine"]), to_fraction(spec.get("bias", 0)))
    raise click.BadParameter(f"unrecognised evaluable {spec!r}")


def _distribution(name) -> CubeDistribution:
    return DISTRIBUTIONS[name or "uniform_cube"]


def _run_l2(p, seed) -> ExperimentReport:
    est = l2_error(evaluable(p["f"]), evaluable(p["g"]), _distribution(p.get("mu")),
                   p.get("method", "exact_piecewise"), d=p.get("d"), n=int(p.get("n", 100_000)), seed=seed)
    limit = p.get("max_error")
    ok = True
    if limit is not None:
        limit = to_fraction(limit)
        ok = est.upper() <= limit if est.exact else est.value <= float(limit) + 2 * est.value_stderr
    return ExperimentReport("l2_error", {**p, "seed": seed}, [est.to_json()], {"max_error": limit}, ok)


def _run(name: str, p: dict, seed: int) -> ExperimentReport:
    if name == "exhaustive_equivalence":
        return exhaustive_equivalence(evaluable(p["a"]), evaluable(p["b"]), int(p["d"]))
    if name == "l2_error":
        return _run_l2(p, seed)
    if name == "packing_distance_check":
        return packing_distance_check(int(p["d"]), p["psi"], p["psi_prime"])
    if name == "extractor_failure_rate":
        return extractor_failure_rate(int(p["c"]), int(p.get("d", 1)), delta=p.get("delta"),
                                      extractor=p.get("extractor", "shallow"), mu=_distribution(p.get("mu")),
                                      n=int(p.get("n", 100_000)), seed=seed, target=float(p.get("target", 0.01)),
                                      inputs=p.get("inputs"))
    if name == "cost_sweep":
        kw = {k: p[k] for k in ("eps", "partitions", "exhaustive_up_to") if k in p}
        if "exponent_range" in p:
            kw["exponent_range"] = tuple(p["exponent_range"])
        return cost_sweep(p["model"], p.get("kind", "DISJ"), [int(v) for v in p["ds"]], seed=seed, **kw)
    if name == "pipeline_check":
        f = evaluable(p["f"])
        return pipeline_check(f, int(p["d"]), int(p["c"]), delta=p.get("delta"), mu=_distribution(p.get("mu")),
                              method=p.get("method"), n=int(p.get("n", 100_000)), seed=seed,
                              lipschitz=p.get("lipschitz", 1), extractor=p.get("extractor", "shallow"))
    raise click.BadParameter(f"unknown experiment {name!r}")


EXPERIMENTS = ("exhaustive_equivalence", "l2_error", "packing_distance_check", "extractor_failure_rate",
               "cost_sweep", "pipeline_check")


@main.command("lab")
@click.argument("experiment", type=click.Choice(EXPERIMENTS))
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), default="report.json")
def lab(experiment, params_path, seed, out):
    """Run an experiment; exit status 0 iff its verdict is pass."""
    params = json.loads(Path(params_path).read_text())
    try:
        report = _run(experiment, params, seed)
    except DomainError as exc:
        raise click.ClickException(str(exc))
    Path(out).write_text(report.dumps() + "\n")
    if experiment == "cost_sweep":
        Path(out).with_suffix(".csv").write_text(report.to_csv())
    click.echo(f"{experiment}: {report.verdict}")
    sys.exit(0 if report.passed else 1)


if __name__ == "__main__":
    main()
