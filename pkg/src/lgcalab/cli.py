"""Command-line entry points.

Subcommands:
  lgca run        HPP/FHP lattice-gas runs, snapshots, macro fields, and the
                  shear-wave viscosity measurement
  eca run         spacetime diagram of an elementary CA rule
  eca table       pattern-response table of all 256 rules
  pca rulespace   eigenvalues/loadings of the rule-space correlation matrix
  pca eig         generic symmetric eigensolve of a CSV matrix
  wsccs colony    colony Markov chain: exact analysis plus sampled paths

Exit codes: 0 success, 1 usage error (bad flags or out-of-domain parameters,
with the violated precondition named), 2 numerical failure (eigensolver
non-convergence, viscosity fit failure, exact-check mismatch).

The seed comes from --seed, else from LGCALAB_SEED, else 0.  Identical seeds
give byte-identical output files; the run manifest written alongside them
carries wall-clock timestamps and is the one file excluded from that
guarantee.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, dynamics, eca, io, observables, pca, wsccs
from .errors import NumericalError
from .lattice import HEX6, SQUARE4, LatticeState, Topology

_MODEL_KINDS = {dynamics.HPP: SQUARE4, dynamics.FHP: HEX6}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _resolve_seed(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("LGCALAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"LGCALAB_SEED must be an integer, got {env!r}")
    return 0


def _write_manifest(path, subcommand: str, args: argparse.Namespace, seed: int,
                    outputs: list[Path], started: str) -> None:
    params = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("func", "seed")
    }
    manifest = io.RunManifest(
        subcommand=subcommand,
        parameters=params,
        seed=seed,
        version=__version__,
        started_at=started,
        finished_at=_now(),
        outputs=[str(p) for p in outputs],
    )
    io.write_manifest(path, manifest)


# ---------------------------------------------------------------- lgca run


def _cmd_lgca_run(args) -> int:
    started = _now()
    seed = _resolve_seed(args.seed)
    kind = _MODEL_KINDS[args.model]
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []

    if args.measure_viscosity:
        if args.model != dynamics.FHP:
            raise ValueError("viscosity measurement requires --model fhp")
        result = observables.measure_viscosity(
            args.width, args.height, args.density, args.u0, args.steps, seed
        )
        outputs.append(
            io.write_csv(
                outdir / "viscosity.csv",
                ("t", "amplitude"),
                [(t, a) for t, a in enumerate(result.amplitudes)],
            )
        )
        _write_manifest(outdir / "manifest.json", "lgca run", args, seed, outputs, started)
        if not result.ok:
            print("viscosity fit failed: no decaying shear-wave signal", file=sys.stderr)
            return 2
        predicted = observables.predicted_viscosity(args.density).nu_total
        print(f"measured nu   = {result.nu:.6g} (fit over {result.fit_steps} steps)")
        print(f"predicted nu  = {predicted:.6g}")
        return 0

    topology = Topology(kind, args.width, args.height)
    state = dynamics.random_state(topology, args.density, seed)
    table = dynamics.build_collision_table(args.model)
    rng = dynamics.RandomPolicy(seed)

    mass0 = state.particle_count()
    mom0 = state.momentum_units()
    window = max(1, min(args.macro_window, args.steps + 1))
    occ_sum = np.zeros((topology.z, topology.height, topology.width))
    occ_steps = 0

    def snap(s: LatticeState) -> None:
        outputs.append(io.snapshot_pgm(outdir / f"snapshot_t{s.time:06d}.pgm", s))

    if args.snapshot_every:
        snap(state)
    for _ in range(args.steps):
        state = dynamics.step(state, table, rng)
        if args.snapshot_every and state.time % args.snapshot_every == 0:
            snap(state)
        if state.time > args.steps - window:
            occ_sum += state.planes()
            occ_steps += 1
    if occ_steps == 0:  # steps == 0: average the initial state alone
        occ_sum += state.planes()
        occ_steps = 1

    occ = observables.OccupationField(
        topology,
        _block_mean(occ_sum / occ_steps, args.macro_block),
        args.macro_block,
        occ_steps,
    )
    outputs.append(
        io.write_macrofield_csv(outdir / "macro.csv", observables.macro_fields(occ))
    )
    outputs.append(io.snapshot_pgm(outdir / "final.pgm", state))

    mass1 = state.particle_count()
    mom1 = state.momentum_units()
    print(f"mass     initial={mass0} final={mass1} conserved={mass0 == mass1}")
    print(f"momentum initial={mom0} final={mom1} conserved={mom0 == mom1}")
    _write_manifest(outdir / "manifest.json", "lgca run", args, seed, outputs, started)
    return 0


def _block_mean(planes: np.ndarray, block: int) -> np.ndarray:
    z, h, w = planes.shape
    if h % block or w % block:
        raise ValueError("macro block size must divide the lattice dimensions")
    blocked = planes.reshape(z, h // block, block, w // block, block).mean(axis=(2, 4))
    return np.moveaxis(blocked, 0, -1)


# ----------------------------------------------------------------- eca


def _cmd_eca_run(args) -> int:
    started = _now()
    seed = _resolve_seed(args.seed)
    rule = eca.EcaRule.from_number(args.rule)
    if args.init == "single":
        row = eca.single_seed_row(args.width)
    else:
        key = np.array([seed & 0xFFFFFFFFFFFFFFFF, 4], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=key))
        row = gen.integers(0, 2, size=args.width, dtype=np.uint8)
    boundary = eca.BOUNDARY_ZERO if args.boundary == "zero" else eca.BOUNDARY_PERIODIC
    diagram = eca.evolve(rule, row, args.steps, boundary)

    out = Path(args.out) if args.out else Path(f"eca_rule{args.rule}.pbm")
    outputs = [io.write_pbm(out, diagram.rows)]
    if args.out_csv:
        outputs.append(io.write_diagram_csv(Path(args.out_csv), diagram.rows))
    _write_manifest(out.with_suffix(".manifest.json"), "eca run", args, seed, outputs, started)
    return 0


def _cmd_eca_table(args) -> int:
    started = _now()
    table = eca.build_pattern_table(args.l)
    out = Path(args.out)
    outputs = [io.write_pattern_table_csv(out, table.entries)]
    _write_manifest(out.with_suffix(".manifest.json"), "eca table", args, 0, outputs, started)
    return 0


# ----------------------------------------------------------------- pca


def _cmd_pca_rulespace(args) -> int:
    started = _now()
    spectrum = pca.analyze_rulespace(args.l)
    for k in range(7):
        print(f"lambda_{k + 1} = {spectrum.eigenvalues[k]:.4f}")
    out = Path(args.out_spectrum)
    outputs = [io.write_spectrum_csv(out, spectrum.eigenvalues)]
    if args.out_loadings:
        outputs.append(io.write_loadings_csv(Path(args.out_loadings), spectrum.eigenvectors))
    _write_manifest(out.with_suffix(".manifest.json"), "pca rulespace", args, 0, outputs, started)
    return 0


def _cmd_pca_eig(args) -> int:
    started = _now()
    matrix = io.read_matrix_csv(args.infile)
    spectrum = pca.eig_sym(matrix)
    out = Path(args.out)
    outputs = [io.write_spectrum_csv(out, spectrum.eigenvalues)]
    _write_manifest(out.with_suffix(".manifest.json"), "pca eig", args, 0, outputs, started)
    return 0


# ----------------------------------------------------------------- wsccs


def _cmd_wsccs_colony(args) -> int:
    started = _now()
    seed = _resolve_seed(args.seed)
    chain = wsccs.colony_matrix(args.n, args.p)

    if args.exact_check:
        defs = wsccs.colony_defs(args.p)
        worst = 0.0
        for i in range(args.n + 1):
            dist = wsccs.compose_step(defs, wsccs.colony_state(args.n, i))
            row = np.zeros(args.n + 1)
            for state, prob in dist.items():
                row[state.count(wsccs.ACTIVE)] += prob
            worst = max(worst, float(np.abs(row - chain.p[i]).max()))
        if worst > 1e-12:
            print(f"exact check failed: max deviation {worst:.3e}", file=sys.stderr)
            return 2
        print(f"exact check passed: max deviation {worst:.3e}")

    paths = wsccs.simulate(chain, args.n, args.steps, args.trials, seed)
    analysis = wsccs.analyze(chain, args.n, args.steps)
    print(f"expected absorption time from {args.n} active: {analysis.expected_absorption:.6g}")

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = [
        io.write_chain_csv(outdir / "colony_chain.csv", chain.states, chain.p),
        io.write_trajectories_csv(outdir / "colony_trajectories.csv", chain.states, paths),
    ]
    _write_manifest(outdir / "manifest.json", "wsccs colony", args, seed, outputs, started)
    return 0


# ----------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="lgcalab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"lgcalab {__version__}")
    top = parser.add_subparsers(dest="group", required=True)

    lgca = top.add_parser("lgca", help="lattice-gas simulations").add_subparsers(
        dest="command", required=True
    )
    run = lgca.add_parser("run", help="run an HPP or FHP gas")
    run.add_argument("--model", choices=(dynamics.HPP, dynamics.FHP), required=True)
    run.add_argument("--width", type=int, required=True)
    run.add_argument("--height", type=int, required=True)
    run.add_argument("--steps", type=int, required=True)
    run.add_argument("--density", type=float, required=True,
                     help="mean particles per site; each (site, direction) is "
                          "occupied independently with probability density/z")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--snapshot-every", type=int, default=0, metavar="K")
    run.add_argument("--measure-viscosity", action="store_true",
                     help="shear-wave decay experiment instead of a plain run")
    run.add_argument("--u0", type=float, default=0.05, help="shear-wave amplitude")
    run.add_argument("--outdir", default=".")
    run.add_argument("--macro-block", type=int, default=1)
    run.add_argument("--macro-window", type=int, default=100)
    run.set_defaults(func=_cmd_lgca_run)

    eca_group = top.add_parser("eca", help="elementary cellular automata").add_subparsers(
        dest="command", required=True
    )
    erun = eca_group.add_parser("run", help="evolve a rule into a spacetime diagram")
    erun.add_argument("--rule", type=int, required=True)
    erun.add_argument("--width", type=int, required=True)
    erun.add_argument("--steps", type=int, required=True)
    erun.add_argument("--init", choices=("single", "random"), default="single")
    erun.add_argument("--boundary", choices=("zero", "periodic"), default="zero")
    erun.add_argument("--seed", type=int, default=None)
    erun.add_argument("--out", default=None, help="PBM output path")
    erun.add_argument("--out-csv", default=None)
    erun.set_defaults(func=_cmd_eca_run)

    etable = eca_group.add_parser("table", help="pattern-response table")
    etable.add_argument("--l", type=int, required=True)
    etable.add_argument("--out", required=True)
    etable.set_defaults(func=_cmd_eca_table)

    pca_group = top.add_parser("pca", help="principal component analysis").add_subparsers(
        dest="command", required=True
    )
    prule = pca_group.add_parser("rulespace", help="analyze the 256-rule response table")
    prule.add_argument("--l", type=int, required=True)
    prule.add_argument("--out-spectrum", required=True)
    prule.add_argument("--out-loadings", default=None)
    prule.set_defaults(func=_cmd_pca_rulespace)

    peig = pca_group.add_parser("eig", help="symmetric eigensolve of a CSV matrix")
    peig.add_argument("--in", dest="infile", required=True)
    peig.add_argument("--out", required=True)
    peig.set_defaults(func=_cmd_pca_eig)

    wsccs_group = top.add_parser("wsccs", help="process-algebra colony").add_subparsers(
        dest="command", required=True
    )
    colony = wsccs_group.add_parser("colony", help="colony Markov chain")
    colony.add_argument("--n", type=int, required=True)
    colony.add_argument("--p", type=float, required=True)
    colony.add_argument("--steps", type=int, required=True)
    colony.add_argument("--trials", type=int, required=True)
    colony.add_argument("--seed", type=int, default=None)
    colony.add_argument("--exact-check", action="store_true",
                        help="verify the binomial matrix against the exact expansion")
    colony.add_argument("--outdir", default=".")
    colony.set_defaults(func=_cmd_wsccs_colony)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
