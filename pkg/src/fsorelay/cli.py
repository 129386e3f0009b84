"""Command-line entry point.

Subcommands run one experiment each and drop a CSV table, an SVG figure,
and a manifest into the output directory. Exit codes: 0 on success, 2 for
scenario/usage errors, 3 when an input file is missing or unreadable.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import replace

import numpy as np

from .channel import collimated_waist
from .optics import GaussianBeamParams
from .outputs import write_outputs
from .scenario import Scenario, ScenarioError, list_presets, load_scenario, scenario_hash
from .sweeps import (
    run_ber_sweep,
    run_fading_stats,
    run_mdg_sweep,
    run_oracle_check,
    run_relay_location_sweep,
)
from .turbulence import TurbulenceParams, coherence_length, generate_screen

_RUNNERS = {
    "ber-sweep": run_ber_sweep,
    "relay-sweep": run_relay_location_sweep,
    "mdg-sweep": run_mdg_sweep,
    "fading-stats": run_fading_stats,
}


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--scenario", "-s", default=None,
                    help="scenario file path or bundled preset name")
    sp.add_argument("--out", "-o", default="out", help="output directory")
    sp.add_argument("--seed", type=int, default=None,
                    help="override the scenario's master seed")
    sp.add_argument("--threads", type=int, default=1,
                    help="worker processes for ensemble drawing")
    sp.add_argument("--mc-bits", type=int, default=None,
                    help="Monte Carlo bits per state (0 uses the Gaussian closed form)")
    sp.add_argument("--subharmonics", type=int, default=None,
                    help="low-frequency augmentation levels for phase screens")
    sp.add_argument("--split-step", type=int, default=None,
                    help="phase screens per hop (1 = single screen)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsorelay",
        description="Dual-hop free-space optical link with an in-line "
                    "amplified relay: fading, noise and BER experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    descriptions = {
        "ber-sweep": "BER vs transmit power for each relay/gain combination",
        "relay-sweep": "BER vs transmit power for each relay position",
        "mdg-sweep": "BER vs transmit power for each differential-gain value",
        "fading-stats": "fading histogram and summary statistics",
    }
    for name, text in descriptions.items():
        sp = sub.add_parser(name, help=text)
        _add_common(sp)

    sp = sub.add_parser("oracle", help="compare closed-form noise terms "
                                       "against the time-domain estimator")
    _add_common(sp)
    sp.add_argument("--states", type=int, default=3)
    sp.add_argument("--terms", type=int, default=64,
                    help="background tone pairs per side")
    sp.add_argument("--realizations", type=int, default=400)

    sp = sub.add_parser("screens", help="dump raw phase screens for one hop")
    _add_common(sp)
    sp.add_argument("--count", type=int, default=8)
    sp.add_argument("--hop", type=int, choices=(1, 2), default=1)

    sub.add_parser("presets", help="list bundled scenario presets")
    return parser


def _load_scenario(args: argparse.Namespace) -> Scenario:
    if args.scenario is None:
        scenario = Scenario()
    else:
        scenario = load_scenario(args.scenario)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "mc_bits", None) is not None:
        overrides["mc_bits"] = args.mc_bits
    if getattr(args, "subharmonics", None) is not None:
        overrides["subharmonics"] = args.subharmonics
    if getattr(args, "split_step", None) is not None:
        overrides["split_step"] = args.split_step
    return replace(scenario, **overrides) if overrides else scenario


def _print_written(written: dict[str, str]) -> None:
    for path in written.values():
        print(f"wrote {path}")


def _run_sweep_command(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args)
    runner = _RUNNERS[args.command]
    start = time.perf_counter()
    result = runner(scenario, threads=args.threads)
    elapsed = time.perf_counter() - start
    written = write_outputs(args.out, result, elapsed)
    print(f"{result.kind}: scenario {scenario_hash(scenario)}, "
          f"{elapsed:.1f} s")
    for key, value in result.meta.items():
        print(f"  {key} = {value}")
    _print_written(written)
    return 0


def _run_oracle_command(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args)
    start = time.perf_counter()
    result = run_oracle_check(scenario, n_states=args.states,
                              m_terms=args.terms,
                              n_realizations=args.realizations,
                              seed=scenario.master_seed)
    elapsed = time.perf_counter() - start
    header, rows = result.tables["oracle"]
    term_width = max(len(str(row[1])) for row in rows)
    print(f"{'state':>5}  {'term':<{term_width}}  {'closed':>12}  "
          f"{'estimate':>12}  {'se':>10}")
    for row in rows:
        print(f"{row[0]:>5}  {row[1]:<{term_width}}  {row[2]:>12.5e}  "
              f"{row[3]:>12.5e}  {row[4]:>10.2e}")
    written = write_outputs(args.out, result, elapsed)
    _print_written(written)
    return 0


def _run_screens_command(args: argparse.Namespace) -> int:
    import os

    scenario = _load_scenario(args)
    if scenario.cn2 <= 0:
        raise ScenarioError("screen generation needs cn2 > 0")
    params = scenario.system_params()
    geometry = scenario.geometry()
    hop = geometry.hop(args.hop)
    mfd_um = scenario.smf_mfd_um if args.hop == 1 else scenario.fmf_mfd_um
    waist = collimated_waist(mfd_um * 1e-6, hop.focal_tx, params.wavelength)
    r0 = coherence_length(TurbulenceParams(
        scenario.cn2, hop.distance, 2.0 * math.pi / params.wavelength,
        GaussianBeamParams(waist, params.wavelength),
    ))
    grid = scenario.free_grid()
    screens = np.empty((args.count, grid.n_points, grid.n_points),
                       dtype=np.float32)
    for i in range(args.count):
        ss = np.random.SeedSequence(scenario.master_seed, spawn_key=(i,))
        seed = int(ss.generate_state(1, np.uint64)[0])
        screen = generate_screen(r0, grid, seed, scenario.subharmonics)
        screens[i] = screen.phase.astype(np.float32)
    os.makedirs(args.out, exist_ok=True)
    raw_path = os.path.join(args.out, "screens.f32")
    screens.tofile(raw_path)
    header_path = os.path.join(args.out, "screens.txt")
    header = "\n".join([
        f"count = {args.count}",
        f"n_points = {grid.n_points}",
        f"spacing_m = {grid.spacing!r}",
        f"r0_m = {r0!r}",
        f"hop = {args.hop}",
        f"master_seed = {scenario.master_seed}",
        f"subharmonics = {scenario.subharmonics}",
        "dtype = <f4",
        "layout = row-major, screen index slowest",
    ]) + "\n"
    with open(header_path, "w", encoding="utf-8") as fh:
        fh.write(header)
    print(f"r0 = {r0 * 1e3:.2f} mm over {hop.distance / 1e3:g} km")
    print(f"wrote {raw_path}")
    print(f"wrote {header_path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in _RUNNERS:
            return _run_sweep_command(args)
        if args.command == "oracle":
            return _run_oracle_command(args)
        if args.command == "screens":
            return _run_screens_command(args)
        if args.command == "presets":
            for name in list_presets():
                print(name)
            return 0
        raise AssertionError(f"unhandled command {args.command}")
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
