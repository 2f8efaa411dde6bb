"""Command-line front end.

Subcommands wire the pipeline end to end:

* ``generate``     build (optionally noisy) memory circuits
* ``golden-check`` compare the 4x6 vertical 100-round circuit to the
                   bundled reference listing
* ``distance``     graphlike code distance tables
* ``benchmark``    Monte Carlo sampling + decoding into a stats CSV
* ``fit``          lambda factors and teraquop footprints from a stats CSV
* ``plot``         SVG plots from a stats CSV

Exit codes: 0 success, 2 configuration errors, 1 runtime failures.
``HEXMEM_WORKERS`` overrides the benchmark worker count.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import analysis
from .analysis import StatsRecord, read_stats, write_stats
from .builder import ExperimentSpec, build_memory_circuit
from .circuit import parse_circuit, serialize_circuit, strip_noise
from .dem import (build_matching_graph, circuit_dem, directional_distance,
                  memory_dem, table_distance)
from .decode import MatchingDecoder, logical_error_count
from .lattice import PatchSpec, default_aspect
from .noise import MODEL_NAMES, NoiseModel, apply_noise, decompose_gates
from .plotting import LogLogPlot
from .sim import FrameSampler, detection_fractions

GOLDEN_RESOURCE = Path(__file__).parent / "data" / "appendix_4x6_v100.stim"


class ConfigError(ValueError):
    pass


def _spec_from_args(args) -> ExperimentSpec:
    patch = PatchSpec(args.w, args.h, sheared=getattr(args, "sheared", False))
    rounds = args.rounds
    if rounds is None:
        d = min(directional_distance(args.model, patch, "H"),
                directional_distance(args.model, patch, "V"))
        rounds = 3 * d + (3 * d) % 2
        rounds = max(6, rounds)
    return ExperimentSpec(patch, args.obs.upper(), rounds, args.model)


# ----------------------------------------------------------------------
# generate / golden-check
# ----------------------------------------------------------------------

def cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    circuit = build_memory_circuit(spec)
    if args.p > 0:
        circuit = apply_noise(circuit, NoiseModel(args.model, args.p))
    elif NoiseModel(args.model, 0).uses_ancillas and args.decompose:
        circuit = decompose_gates(circuit, NoiseModel(args.model, 0))
    text = serialize_circuit(circuit)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out} ({circuit.num_qubits} qubits, "
              f"{circuit.num_detectors} detectors)")
    else:
        sys.stdout.write(text)
    if args.golden_check:
        return cmd_golden_check(args)
    return 0


def structural_fingerprint(circuit):
    """(coords, per-line kinds, per-block detector/observable structure).

    Detector order inside a measurement block is not semantic, so blocks
    compare as sets of (coordinates, lookback set).
    """
    from .circuit import iter_unrolled
    kinds = []
    blocks = []
    dets, obs = set(), []
    for inst in iter_unrolled(circuit.instructions):
        kinds.append(inst.name)
        if inst.name == "MPP":
            blocks.append((frozenset(dets), tuple(obs)))
            dets, obs = set(), []
            blocks.append(tuple(str(t) for t in inst.targets))
        elif inst.name == "DETECTOR":
            dets.add((inst.args, frozenset(t.offset for t in inst.targets)))
        elif inst.name == "OBSERVABLE_INCLUDE":
            obs.append((int(inst.args[0]),
                        tuple(sorted(t.offset for t in inst.targets))))
    blocks.append((frozenset(dets), tuple(obs)))
    return circuit.qubit_coords, tuple(kinds), tuple(blocks)


def cmd_golden_check(args=None) -> int:
    mine = build_memory_circuit(
        ExperimentSpec(PatchSpec(4, 6), "V", 100, "em3"))
    golden = parse_circuit(GOLDEN_RESOURCE.read_text())
    a = structural_fingerprint(mine)
    b = structural_fingerprint(golden)
    labels = ("qubit coordinates", "instruction kinds", "detector/observable structure")
    ok = True
    for label, x, y in zip(labels, a, b):
        status = "match" if x == y else "MISMATCH"
        ok &= x == y
        print(f"golden {label}: {status}")
    return 0 if ok else 1


# ----------------------------------------------------------------------
# distance
# ----------------------------------------------------------------------

def cmd_distance(args) -> int:
    models = args.models.split(",")
    sizes = _parse_int_list(args.sizes)
    rows = []
    for sheared in _geometries(args.geometry):
        for model in models:
            for orientation in args.orientations.split(","):
                for size in sizes:
                    if sheared and orientation == "h" and size % 2:
                        rows.append((model, orientation, size, sheared, "N/A"))
                        continue
                    try:
                        d = table_distance(model, size, orientation, sheared)
                    except Exception as err:  # undecomposable and friends
                        print(f"warning: {model} {orientation}={size} "
                              f"sheared={sheared}: {err}", file=sys.stderr)
                        d = "ERR"
                    rows.append((model, orientation, size, sheared, d))
                    print(f"{model:8s} {orientation}={size:<3d} "
                          f"{'sheared' if sheared else 'straight':8s} -> {d}",
                          flush=True)
    if args.out:
        with open(args.out, "w") as f:
            f.write("model,orientation,size,geometry,distance\n")
            for model, orientation, size, sheared, d in rows:
                geom = "sheared" if sheared else "straight"
                f.write(f"{model},{orientation},{size},{geom},{d}\n")
    return 0


def _geometries(choice: str):
    return {"both": (False, True), "straight": (False,),
            "sheared": (True,)}[choice]


def _parse_int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if ".." in part:
            lo, _, rest = part.partition("..")
            hi, _, step = rest.partition("..")
            out.extend(range(int(lo), int(hi) + 1, int(step) if step else 1))
        else:
            out.append(int(part))
    return out


# ----------------------------------------------------------------------
# benchmark
# ----------------------------------------------------------------------

def _benchmark_one(task) -> StatsRecord:
    (model_name, p, w, h, sheared, obs, rounds, shots, max_errors,
     seed) = task
    patch = PatchSpec(w, h, sheared=sheared)
    model = NoiseModel(model_name, p)
    d = min(directional_distance(model_name, patch, "H"),
            directional_distance(model_name, patch, "V"))
    if rounds is None:
        rounds = max(6, 3 * d + (3 * d) % 2)
    spec = ExperimentSpec(patch, obs, rounds, model_name)
    circuit = apply_noise(build_memory_circuit(spec), model)
    sampler = FrameSampler(circuit)
    decoder = MatchingDecoder(build_matching_graph(circuit_dem(circuit)))
    done = errors = 0
    block = 0
    while done < shots and errors < max_errors:
        take = min(shots - done, 16384)
        batch = sampler.sample(take, seed=seed + 7919 * block)
        _, err = logical_error_count(decoder, batch)
        errors += err
        done += take
        block += 1
    return StatsRecord(model=model_name, p=p, w=w, h=h,
                       geometry=patch.geometry, obs=obs, d=d, rounds=rounds,
                       shots=done, errors=errors, seed=seed)


def _record_key(r: StatsRecord):
    return (r.model, r.p, r.w, r.h, r.geometry, r.obs, r.rounds, r.seed)


def cmd_benchmark(args) -> int:
    models = args.models.split(",")
    ps = [float(x) for x in args.p.split(",")]
    tasks = []
    for model in models:
        sizes = ([default_aspect(model, d) for d in _parse_int_list(args.distances)]
                 if args.distances else
                 [PatchSpec(*map(int, wh.split("x"))) for wh in args.sizes.split(",")])
        for p in ps:
            for patch in sizes:
                for obs in ("H", "V") if args.obs == "both" else (args.obs.upper(),):
                    tasks.append((model, p, patch.width, patch.height,
                                  patch.sheared, obs, args.rounds, args.shots,
                                  args.max_errors, args.seed))
    existing = set()
    if args.out and Path(args.out).exists() and args.resume:
        existing = {_record_key(r) for r in read_stats(args.out)}
    todo = []
    for t in tasks:
        probe = StatsRecord(model=t[0], p=t[1], w=t[2], h=t[3],
                            geometry="sheared" if t[4] else "straight",
                            obs=t[5], d=1, rounds=t[6] or 0, shots=1,
                            errors=0, seed=t[9])
        if _record_key(probe) in existing and t[6] is not None:
            continue
        todo.append(t)

    workers = int(os.environ.get("HEXMEM_WORKERS", "1"))
    results = []
    if workers > 1 and len(todo) > 1:
        import multiprocessing as mp
        with mp.Pool(workers) as pool:
            for rec in pool.imap(_benchmark_one, todo):
                results.append(rec)
                _report(rec)
                if args.out:
                    write_stats(args.out, [rec], append=True)
    else:
        for t in todo:
            rec = _benchmark_one(t)
            results.append(rec)
            _report(rec)
            if args.out:
                write_stats(args.out, [rec], append=True)
    if not args.out:
        for rec in results:
            print(rec)
    return 0


def _report(rec: StatsRecord) -> None:
    rate = rec.errors / rec.shots if rec.shots else 0.0
    print(f"{rec.model} p={rec.p} {rec.w}x{rec.h} {rec.obs} d={rec.d}: "
          f"{rec.errors}/{rec.shots} = {rate:.3e}", flush=True)


# ----------------------------------------------------------------------
# fit / plot
# ----------------------------------------------------------------------

def cmd_fit(args) -> int:
    records = read_stats(args.stats)
    if not records:
        print("no groups: stats file is empty")
        return 0
    groups = analysis.combined_cell_rates(records)
    if not groups:
        print("no groups: need both H and V records per (model, p, d)")
        return 0
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lam_rows = []
    foot_rows = []
    for (model, p), points in sorted(groups.items()):
        try:
            est = analysis.fit_lambda(p, points)
        except analysis.InsufficientSuppression as err:
            print(f"skipping {model} p={p}: {err}")
            continue
        lam_rows.append((model, p, est.lam, est.low, est.high))
        print(f"{model} p={p}: lambda = {est.lam:.2f} "
              f"[{est.low:.2f}, {est.high:.2f}]")
        try:
            proj = analysis.teraquop_footprint(est, model,
                                               verify_aspect=not args.fast)
            foot_rows.append((model, p, proj.required_distance, proj.qubits,
                              proj.qubits_low, proj.qubits_high))
            print(f"  teraquop: d={proj.required_distance} -> "
                  f"{proj.qubits} qubits [{proj.qubits_low}, {proj.qubits_high}]")
        except ValueError as err:
            print(f"  no teraquop projection: {err}")
    with open(out_dir / "lambdas.csv", "w") as f:
        f.write("model,p,lambda,lambda_low,lambda_high\n")
        for row in lam_rows:
            f.write(",".join(str(v) for v in row) + "\n")
    with open(out_dir / "teraquop.csv", "w") as f:
        f.write("model,p,distance,qubits,qubits_low,qubits_high\n")
        for row in foot_rows:
            f.write(",".join(str(v) for v in row) + "\n")
    _plot_lambdas(lam_rows, out_dir / "lambdas.svg")
    _plot_footprints(foot_rows, out_dir / "teraquop.svg")
    print(f"wrote {out_dir}/lambdas.csv, teraquop.csv and SVG plots")
    return 0


def _plot_lambdas(rows, path) -> None:
    plot = LogLogPlot("Error-suppression factor", "physical error rate p",
                      "lambda (per +2 distance)")
    for model in sorted({r[0] for r in rows}):
        sel = sorted(r for r in rows if r[0] == model)
        plot.add(model, [r[1] for r in sel], [r[2] for r in sel],
                 [r[3] for r in sel], [r[4] for r in sel])
    plot.save(path)


def _plot_footprints(rows, path) -> None:
    plot = LogLogPlot("Teraquop footprint", "physical error rate p",
                      "physical qubits")
    for model in sorted({r[0] for r in rows}):
        sel = sorted(r for r in rows if r[0] == model)
        plot.add(model, [r[1] for r in sel], [r[3] for r in sel],
                 [r[4] for r in sel], [r[5] for r in sel])
    plot.save(path)


def cmd_plot(args) -> int:
    records = read_stats(args.stats)
    groups = analysis.combined_cell_rates(records)
    plot = LogLogPlot("Combined code-cell logical error rate",
                      "physical error rate p", "logical error rate")
    by_model_d: dict[tuple, list] = {}
    for (model, p), points in groups.items():
        for d, rate in points:
            by_model_d.setdefault((model, d), []).append((p, rate))
    for (model, d), pts in sorted(by_model_d.items()):
        pts.sort()
        plot.add(f"{model} d={d}", [p for p, _ in pts], [r for _, r in pts])
    plot.save(args.out)
    print(f"wrote {args.out}")
    return 0


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexmem",
        description="Planar honeycomb-code memory benchmarking")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit a memory-experiment circuit")
    g.add_argument("--model", choices=MODEL_NAMES, default="em3")
    g.add_argument("--w", type=int, required=True)
    g.add_argument("--h", type=int, required=True)
    g.add_argument("--sheared", action="store_true")
    g.add_argument("--obs", choices=("h", "v", "H", "V"), default="v")
    g.add_argument("--rounds", type=int, default=None)
    g.add_argument("--p", type=float, default=0.0)
    g.add_argument("--decompose", action="store_true",
                   help="emit gate-level circuit even when noiseless")
    g.add_argument("--out", default=None)
    g.add_argument("--golden-check", action="store_true")
    g.set_defaults(func=cmd_generate)

    gc = sub.add_parser("golden-check",
                        help="compare the 4x6 V 100-round build to the "
                             "bundled reference")
    gc.set_defaults(func=cmd_golden_check)

    d = sub.add_parser("distance", help="graphlike code distance table")
    d.add_argument("--models", default="em3,sd6,si1000")
    d.add_argument("--sizes", default="3..39..3",
                   help="comma list or lo..hi[..step]")
    d.add_argument("--orientations", default="v")
    d.add_argument("--geometry", choices=("both", "straight", "sheared"),
                   default="straight")
    d.add_argument("--out", default=None)
    d.set_defaults(func=cmd_distance)

    b = sub.add_parser("benchmark", help="Monte Carlo sample and decode")
    b.add_argument("--models", default="em3")
    b.add_argument("--p", required=True, help="comma-separated error rates")
    b.add_argument("--distances", default=None,
                   help="target distances (uses default aspect)")
    b.add_argument("--sizes", default=None, help="comma list of WxH")
    b.add_argument("--obs", choices=("both", "h", "v", "H", "V"),
                   default="both")
    b.add_argument("--rounds", type=int, default=None)
    b.add_argument("--shots", type=int, default=100_000)
    b.add_argument("--max-errors", type=int, default=1000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default=None)
    b.add_argument("--resume", action="store_true", default=True)
    b.set_defaults(func=cmd_benchmark)

    f = sub.add_parser("fit", help="lambda factors and teraquop footprints")
    f.add_argument("--stats", required=True)
    f.add_argument("--out-dir", default="fits")
    f.add_argument("--fast", action="store_true",
                   help="skip distance re-verification in aspect rounding")
    f.set_defaults(func=cmd_fit)

    p = sub.add_parser("plot", help="plot combined rates from a stats CSV")
    p.add_argument("--stats", required=True)
    p.add_argument("--out", default="rates.svg")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "distances", None) and getattr(args, "sizes", None):
        parser.error("give --distances or --sizes, not both")
    if (args.command == "benchmark"
            and not (getattr(args, "distances", None) or getattr(args, "sizes", None))):
        parser.error("benchmark needs --distances or --sizes")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - surfaced as runtime failure
        print(f"runtime failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
