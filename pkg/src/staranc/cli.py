"""Command-line front end.

Exit codes: 0 on success, 2 on validation problems (including malformed
flags), 3 when an exhaustive scan would exceed its capacity cap.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .asymptotics import (
    critical_time_scan,
    critical_times_to_csv,
    e_values_to_csv,
    maximizer_set,
    zone_scan,
    zone_to_csv,
    zone_to_svg,
)
from .estimators import CapacityError, Method, estimate
from .experiments import ExperimentConfig, run_experiment_to_dir
from .io import (
    read_alignment_csv,
    write_alignment_csv,
    write_edges_csv,
    write_estimate_json,
)
from .model import (
    AncestralSequence,
    EdgeSpec,
    StationaryDistribution,
    s_from_t,
    states_from_letters,
)
from .simulate import IidEdgeLaw, SimulationConfig, sample_edge_lengths, simulate_alignment


def parse_pi(text: str) -> StationaryDistribution:
    """Comma list ("0.1,0.2,0.7") or ACGT-keyed ("A=0.1,C=0.2,...")."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if any("=" in p for p in parts):
        by_letter = {}
        for part in parts:
            letter, _, value = part.partition("=")
            letter = letter.strip().upper()
            if letter not in "ACGT" or letter in by_letter:
                raise ValueError(f"bad frequency entry {part!r}")
            by_letter[letter] = float(value)
        if sorted(by_letter) != list("ACGT"):
            raise ValueError("ACGT-keyed frequencies need all four letters")
        return StationaryDistribution(tuple(by_letter[ch] for ch in "ACGT"))
    return StationaryDistribution(tuple(float(p) for p in parts))


def parse_states(text: str) -> AncestralSequence:
    """Letters ("AC") or a comma list of 1-based integers ("1,2")."""
    text = text.strip()
    if "," in text or text.isdigit():
        return AncestralSequence(tuple(int(p) for p in text.split(",") if p.strip()))
    return AncestralSequence(states_from_letters(text))


def parse_edge(text: str):
    """Edge grammar: const:<s> | t:<time> | mix:w1@s1,w2@s2 | iid:<family>:<params>.

    iid families: exp:<rate>, point:<t>, unif:<a>,<b> (time space).
    """
    kind, _, rest = text.partition(":")
    if kind == "const":
        return EdgeSpec.constant(float(rest))
    if kind == "t":
        return IidEdgeLaw(family="point", params=(float(rest),))
    if kind == "mix":
        atoms = []
        for atom in rest.split(","):
            w, _, s = atom.partition("@")
            atoms.append((float(w), float(s)))
        return EdgeSpec.mixture(atoms)
    if kind == "iid":
        family, _, params = rest.partition(":")
        values = tuple(float(p) for p in params.split(",") if p.strip())
        names = {"exp": "exponential", "point": "point", "unif": "uniform"}
        if family not in names:
            raise ValueError(f"unknown iid edge family {family!r} (choose exp, point, unif)")
        return IidEdgeLaw(family=names[family], params=values)
    raise ValueError(f"cannot parse edge spec {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="staranc",
        description="Ancestral state reconstruction on star trees with unknown edge lengths",
    )
    parser.add_argument("--version", action="version", version=f"staranc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", required=True, help="output path")

    p = sub.add_parser("simulate", parents=[common], help="draw edges and a tip alignment")
    p.add_argument("--pi", required=True, type=parse_pi)
    p.add_argument("--rho", required=True, type=parse_states, help="true root sequence")
    p.add_argument("--n", required=True, type=int, help="number of leaves")
    p.add_argument("--edge", required=True, type=parse_edge)
    p.add_argument("--letters", action="store_true", help="write ACGT letters (c=4 only)")
    p.add_argument("--edges-out", help="also write the realised edge s values")

    p = sub.add_parser("estimate", parents=[common], help="reconstruct the root from an alignment")
    p.add_argument("--method", required=True, choices=[m.value for m in Method])
    p.add_argument("--pi", required=True, type=parse_pi)
    p.add_argument("--aln", required=True, help="alignment CSV (from `simulate`)")
    p.add_argument("--cap", type=int, default=1 << 20, help="exhaustive-search cap on c^N")

    p = sub.add_parser("efunc", parents=[common], help="dump the limit score of every candidate")
    p.add_argument("--pi", required=True, type=parse_pi)
    p.add_argument("--rho-true", required=True, type=parse_states)
    p.add_argument("--edge", required=True, type=parse_edge)
    p.add_argument("--cap", type=int, default=1 << 20)
    p.add_argument("--letters", action="store_true")

    p = sub.add_parser("zone", parents=[common], help="scan the single-state inconsistency zone")
    p.add_argument("--N", required=True, type=int, dest="n_sites", help="number of sites")
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--svg", help="also render the zone raster")

    p = sub.add_parser("table1", parents=[common], help="critical-time catalogue on the simplex grid")
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--truth", type=parse_states, default=AncestralSequence((1, 2)))
    p.add_argument("--include-same-state", action="store_true",
                   help="also scan constant candidate pairs")
    p.add_argument("--digits", action="store_true", help="numeric states instead of letters")

    p = sub.add_parser("experiment", parents=[common], help="seeded Monte Carlo study")
    p.add_argument("--pi", required=True, type=parse_pi)
    p.add_argument("--rho-true", required=True, type=parse_states)
    p.add_argument("--edge", required=True, type=parse_edge)
    p.add_argument("--n-grid", required=True, help="comma list of leaf counts, increasing")
    p.add_argument("--estimators", required=True, help="comma subset of mle,eb,diff,majority")
    p.add_argument("--replicates", required=True, type=int)
    p.add_argument("--cap", type=int, default=1 << 20)
    return parser


def _cmd_simulate(args) -> int:
    config = SimulationConfig(
        pi=args.pi, rho_true=args.rho, n_leaves=args.n, edge=args.edge, seed=args.seed
    )
    edges = sample_edge_lengths(config)
    alignment = simulate_alignment(args.pi, args.rho, edges, args.seed)
    write_alignment_csv(alignment, args.out, letters=args.letters)
    if args.edges_out:
        write_edges_csv(edges, args.edges_out)
    return 0


def _cmd_estimate(args) -> int:
    alignment = read_alignment_csv(args.aln, c=args.pi.c)
    start = time.perf_counter()
    result = estimate(args.pi, alignment, Method(args.method), search_cap=args.cap)
    wall = time.perf_counter() - start
    write_estimate_json(result, wall, args.out)
    return 0


def _cmd_efunc(args) -> int:
    edge = args.edge
    if isinstance(edge, IidEdgeLaw):
        if edge.family != "point":
            raise ValueError("efunc needs a fixed edge law (const/mix/t), not a random draw")
        edge = EdgeSpec.constant(s_from_t(args.pi, edge.params[0]))
    report = maximizer_set(args.pi, args.rho_true, edge, cap=args.cap)
    e_values_to_csv(report, args.out, c=args.pi.c, letters=args.letters)
    return 0


def _cmd_zone(args) -> int:
    zone = zone_scan(args.n_sites, args.step)
    zone_to_csv(zone, args.out)
    if args.svg:
        zone_to_svg(zone, args.svg)
    return 0


def _cmd_table1(args) -> int:
    truth = tuple(args.truth.states)
    if len(truth) != 2:
        raise ValueError("the true pair must have exactly two sites")
    rows = critical_time_scan(
        grid_step=args.step, truth=truth, include_same_state=args.include_same_state
    )
    critical_times_to_csv(rows, args.out, letters=not args.digits)
    return 0


def _cmd_experiment(args) -> int:
    config = ExperimentConfig(
        pi=args.pi,
        rho_true=args.rho_true,
        edge=args.edge,
        n_grid=tuple(int(v) for v in args.n_grid.split(",") if v.strip()),
        estimators=tuple(Method(v.strip()) for v in args.estimators.split(",") if v.strip()),
        replicates=args.replicates,
        seed=args.seed,
        output_dir=Path(args.out),
        search_cap=args.cap,
    )
    run_experiment_to_dir(config)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "efunc": _cmd_efunc,
    "zone": _cmd_zone,
    "table1": _cmd_table1,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except CapacityError as exc:
        print(f"staranc: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"staranc: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())
