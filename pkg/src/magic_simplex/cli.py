"""Command-line entry point: ``magic-simplex <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .sampling import LatticeTooLarge, Region, SampleSpec
from .separability import (
    CandidateStrategy,
    InvalidKernel,
    build_kernel,
    entanglement_flags,
    load_kernel,
    s1_hull_membership,
    save_kernel,
)
from .symmetry import generate_group
from .weyl import maximally_mixed_coords
from .witness import (
    DEFAULT_RESTARTS,
    WitnessArrays,
    file_fingerprint,
    generate_witness_set,
    random_product_overlaps,
    save_witnesses,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_VALIDATION = 4
MAX_WITNESS_FAILURE_RATE = 0.05
VALIDATION_PRODUCTS = 10_000

log = logging.getLogger("magic_simplex")


class ConfigError(ValueError):
    pass


class ValidationFailure(RuntimeError):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, default=3, help="local dimension (2..5)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--n", type=int, default=10_000, help="number of sampled states")
    common.add_argument("--out", type=Path, help="output file")
    common.add_argument("--witnesses", type=Path, help="witness store")
    common.add_argument("--kernel", type=Path, help="kernel store")
    common.add_argument("--workers", type=int, default=pipeline.default_workers())
    common.add_argument("--evaluate-all", action="store_true", help="evaluate every criterion on every state")
    common.add_argument("--orbit-audit", action="store_true", help="re-classify orbits of a 1%% subsample")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="magic-simplex", description="Entanglement classes of Bell-diagonal qudits.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-witnesses", parents=[common], help="generate a witness store")
    g.add_argument("--count", type=int, default=2000)
    g.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)

    k = sub.add_parser("build-kernel", parents=[common], help="build a kernel store")
    k.add_argument("--kernel-candidates", type=int, default=0)
    k.add_argument("--strategy", choices=[s.value for s in CandidateStrategy], default="twirled")
    k.add_argument("--prune", action="store_true")

    s = sub.add_parser("sample", parents=[common], help="write sampled coordinates")
    s.add_argument("--region", choices=[r.value for r in Region], default="simplex")
    s.add_argument("--steps", type=int, default=1)

    for name in ("classify", "volumes"):
        c = sub.add_parser(name, parents=[common], help=f"{name} sampled or given states")
        c.add_argument("--region", choices=[r.value for r in Region], default="enclosure")
        c.add_argument("--steps", type=int, default=1)
        c.add_argument("--input", type=Path, help="coordinate file (one state per line) instead of sampling")
        c.add_argument("--summary", type=Path, help="machine-readable JSON summary")

    cmp_ = sub.add_parser("compare", parents=[common], help="pairwise detector table from a results file")
    cmp_.add_argument("--input", type=Path, required=True)

    lat = sub.add_parser("lattice-study", parents=[common], help="lattice versus random NPT share")
    lat.add_argument("--steps", type=int, nargs="+", default=list(range(1, 11)))

    sub.add_parser("symmetries", parents=[common], help="print the symmetry group order")
    return p


def _check_d(d: int) -> None:
    if not 2 <= d <= 5:
        raise ConfigError("--d must be between 2 and 5")


def _writable(path: Path | None) -> None:
    if path is None:
        return
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise ConfigError(f"output directory does not exist: {parent}")


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        path.write_text(text if text.endswith("\n") else text + "\n")


def cmd_gen_witnesses(a) -> int:
    if a.count < 1 or a.restarts < 1:
        raise ConfigError("--count and --restarts must be positive")
    if a.out is None:
        raise ConfigError("gen-witnesses needs --out")
    ws = generate_witness_set(a.count, restarts=a.restarts, seed=a.seed, d=a.d, workers=a.workers)
    save_witnesses(a.out, ws)
    failed = a.count - len(ws)
    widths = np.array([w.upper - w.lower for w in ws]) if ws else np.zeros(1)
    print(f"witnesses {len(ws)} of {a.count} (failed {failed}) mean width {widths.mean():.6f}")
    print(f"fingerprint {file_fingerprint(a.out)}")
    arrays = WitnessArrays.from_witnesses(ws)
    if a.kernel is not None:
        if not a.kernel.is_file():
            raise FileNotFoundError(f"kernel store not found: {a.kernel}")
        viol = _violations(arrays, load_kernel(a.kernel).vertices)
        print(f"kernel vertex violations {viol}")
        if viol:
            raise ValidationFailure("witness bounds violated by kernel vertices")
    rng = np.random.default_rng([a.seed, 4])
    viol = _violations(arrays, random_product_overlaps(rng, VALIDATION_PRODUCTS, a.d))
    print(f"random product state violations {viol}")
    if viol:
        raise ValidationFailure("witness bounds violated by product states")
    if failed > MAX_WITNESS_FAILURE_RATE * a.count:
        raise ValidationFailure(f"optimiser failure rate {failed / a.count:.1%} exceeds 5%")
    return EXIT_OK


def _violations(arrays: WitnessArrays, points: np.ndarray) -> int:
    if len(arrays) == 0:
        return 0
    return int((arrays.violations(points) > 0).sum())


def cmd_build_kernel(a) -> int:
    if a.out is None:
        raise ConfigError("build-kernel needs --out")
    if a.kernel_candidates < 0:
        raise ConfigError("--kernel-candidates must be non-negative")
    G = generate_group(a.d)
    store = build_kernel(a.d, G, a.kernel_candidates, a.seed, strategy=a.strategy, prune=a.prune)
    if entanglement_flags(store.vertices).any():
        raise ValidationFailure("kernel vertex detected as entangled")
    save_kernel(a.out, store)
    mm = s1_hull_membership(maximally_mixed_coords(a.d), store)
    counts = {}
    for p in store.provenance:
        counts[p.value] = counts.get(p.value, 0) + 1
    print(f"kernel vertices {len(store)} " + " ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    print(f"orbit closed {store.is_orbit_closed(G)}; maximally mixed state separable {mm.detected}")
    print(f"fingerprint {file_fingerprint(a.out)}")
    return EXIT_OK


def _spec(a) -> SampleSpec:
    try:
        return SampleSpec(a.d, Region(a.region), a.n, a.seed, getattr(a, "steps", 1))
    except ValueError as e:
        raise ConfigError(str(e)) from e


def cmd_sample(a) -> int:
    _writable(a.out)
    C = pipeline.sample_states(_spec(a))
    buf = [f"# seed={a.seed} region={a.region} d={a.d} n={len(C)}"]
    buf += [" ".join(format(x, ".17g") for x in row) for row in C]
    _emit("\n".join(buf), a.out)
    return EXIT_OK


def _read_coords(path: Path, d: int) -> np.ndarray:
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    C = np.loadtxt(path, comments="#", ndmin=2, delimiter=None)
    if C.shape[1] != d * d:
        raise ConfigError(f"input rows need {d * d} coordinates")
    return C


def _classify(a):
    _writable(a.out)
    assets = pipeline.load_assets(a.d, a.witnesses, a.kernel)
    spec = _spec(a)
    if a.input is not None:
        C = _read_coords(a.input, a.d)
        records = pipeline.classify_batch(C, assets, evaluate_all=a.evaluate_all, workers=a.workers)
        spec = SampleSpec(a.d, spec.region, len(C), a.seed, spec.steps)
        report = pipeline.report_from_records(records, spec, assets.fingerprints)
    else:
        report, records = pipeline.estimate_volumes(spec, assets, evaluate_all=a.evaluate_all, workers=a.workers)
    for r in records:
        r.check()
    meta = {"seed": str(a.seed), "region": spec.region.value, "d": str(a.d), "n": str(len(records))}
    meta.update({f"fingerprint_{k}": v for k, v in assets.fingerprints.items()})
    meta["evaluate_all"] = str(int(a.evaluate_all))
    if a.out is not None:
        pipeline.write_results(a.out, records, a.d, meta)
    summary = report.to_dict()
    if a.orbit_audit:
        audit = pipeline.orbit_audit(records, assets, seed=a.seed)
        summary["orbit_audit"] = {"states": audit.states, "elements": audit.elements, "conflicting": list(audit.conflicting)}
    return report, records, summary


def cmd_classify(a) -> int:
    report, records, summary = _classify(a)
    print(report.summary())
    if "orbit_audit" in summary:
        au = summary["orbit_audit"]
        print(f"orbit audit: {au['states']} states, {au['elements']} elements, {len(au['conflicting'])} conflicting")
    if a.summary is not None:
        a.summary.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if report.conflicts or summary.get("orbit_audit", {}).get("conflicting"):
        raise ValidationFailure("inconsistent verdicts detected")
    return EXIT_OK


cmd_volumes = cmd_classify


def cmd_compare(a) -> int:
    if not a.input.is_file():
        raise FileNotFoundError(f"results file not found: {a.input}")
    meta, records = pipeline.read_results(a.input)
    try:
        table = pipeline.compare_criteria(records)
    except ValueError as e:
        raise ConfigError(f"{e}; rerun classify with --evaluate-all") from e
    _emit(pipeline.format_comparison(table), a.out)
    return EXIT_OK


def cmd_lattice_study(a) -> int:
    if a.d not in (2, 3):
        raise ConfigError("lattice-study supports --d 2 and --d 3")
    try:
        rows = pipeline.lattice_vs_random_study(a.d, a.steps, seed=a.seed)
    except LatticeTooLarge as e:
        raise ConfigError(str(e)) from e
    keys = ["steps", "n", "lattice_free", "random_free", "random_se", "deviation_sigma"]
    lines = [f"# seed={a.seed} d={a.d}", "\t".join(keys)]
    for r in rows:
        lines.append("\t".join(str(r[k]) if isinstance(r[k], int) else format(r[k], ".6f") for k in keys))
    _emit("\n".join(lines), a.out)
    return EXIT_OK


def cmd_symmetries(a) -> int:
    print(len(generate_group(a.d)))
    return EXIT_OK


COMMANDS = {
    "gen-witnesses": cmd_gen_witnesses,
    "build-kernel": cmd_build_kernel,
    "sample": cmd_sample,
    "classify": cmd_classify,
    "volumes": cmd_volumes,
    "compare": cmd_compare,
    "lattice-study": cmd_lattice_study,
    "symmetries": cmd_symmetries,
}


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _check_d(a.d)
        if a.workers < 1:
            raise ConfigError("--workers must be positive")
        return COMMANDS[a.command](a)
    except (ConfigError, LatticeTooLarge) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (pipeline.MissingAsset, FileNotFoundError) as e:
        print(f"error: missing asset: {e}", file=sys.stderr)
        return EXIT_MISSING
    except (ValidationFailure, InvalidKernel, pipeline.ConsistencyError) as e:
        print(f"error: validation failed: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
