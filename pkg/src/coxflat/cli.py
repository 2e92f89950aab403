"""Command-line driver: staged pipeline with an on-disk, hash-checked cache.

    coxflat invariants E7
    coxflat potential E6 && coxflat verify E6 --against-fixtures

Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 internal
inconsistency (interpolation surplus, flatness or integrability failure).
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__, golden
from .exactla import DimensionMismatch
from .flatsolve import FlatFrame, FlatSolveError, make_frame, solve_flat
from .groups import GROUP_NAMES, GroupSpec, UnknownGroup, build_basic_invariant, group_spec
from .polycore import format_poly, homogeneous_monomials
from .potential import (IntegrabilityError, Potential, Report, eta_factor, potential_from_frame,
                        verify_all)
from .saito import InterpolationError, MetricTable, eta_table, metric_table
from .groups import WeightSystem

log = logging.getLogger("coxflat")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
STAGES = ("metric", "eta", "flat", "potential", "verify")
DEFAULT_MAX_TERMS = 1_000_000


class UsageError(Exception):
    pass


# files ----------------------------------------------------------------------


def atomic_write(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory and rename into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _frac_tag(q: Fraction) -> str:
    return str(q).replace("/", "_")


@dataclass
class RunConfig:
    group: GroupSpec
    scale: Fraction
    seed: int
    solver: str
    threads: int
    cache: Path

    @property
    def run_dir(self) -> Path:
        return self.cache / self.group.name / f"sigma{_frac_tag(self.scale)}-{self.solver}-seed{self.seed}"


class RunManifest:
    """``key=value`` header plus one ``artifact <file> sha256=<hex>`` line per file.

    The thread count is deliberately absent: outputs do not depend on it.
    """

    NAME = "manifest.txt"

    def __init__(self, directory: Path, header: dict[str, str]):
        self.directory = directory
        self.header = header

    def artifacts(self) -> dict[str, str]:
        path = self.directory / self.NAME
        out = {}
        if path.exists():
            for line in path.read_text().splitlines():
                if line.startswith("artifact "):
                    _, name, h = line.split()
                    out[name] = h.removeprefix("sha256=")
        return out

    def valid(self, name: str) -> bool:
        path = self.directory / name
        return path.exists() and self.artifacts().get(name) == sha256(path)

    def record(self, name: str, text: str) -> None:
        atomic_write(self.directory / name, text)
        arts = self.artifacts()
        arts[name] = sha256(self.directory / name)
        arts = {k: v for k, v in arts.items() if (self.directory / k).exists()}
        lines = [f"{k}={v}" for k, v in self.header.items()]
        lines += [f"artifact {k} sha256={v}" for k, v in sorted(arts.items())]
        atomic_write(self.directory / self.NAME, "\n".join(lines) + "\n")


def _manifest(cfg: RunConfig) -> RunManifest:
    g = cfg.group
    return RunManifest(cfg.run_dir, {
        "tool": "coxflat",
        "version": __version__,
        "group": g.name,
        "degrees": ",".join(map(str, g.degrees)),
        "metric_scale": str(cfg.scale),
        "seed": str(cfg.seed),
        "solver": cfg.solver,
        "quad_normalizer": str(g.quad_normalizer),
        "flat_top_scale": str(g.flat_top_scale),
    })


# serialization --------------------------------------------------------------


def table_text(t: MetricTable) -> str:
    g = t.group
    return "".join(f"{golden.table_key(g, a, b)} = {format_poly(t.entries[a][b])}\n"
                   for a in range(g.rank) for b in range(a, g.rank))


def read_table(g: GroupSpec, path: Path, kind: str, scale: Fraction) -> MetricTable:
    rows = golden.read_entries(path, g.generator_ring)
    n = g.rank
    entries = [[None] * n for _ in range(n)]
    for key, p in rows.items():
        a, b = (g.degrees.index(int(x[1:])) for x in key.split(","))
        entries[a][b] = entries[b][a] = p
    if any(e is None for row in entries for e in row):
        raise ValueError(f"{path.name} is incomplete")
    return MetricTable(g, entries, kind, scale)


def frame_text(fr: FlatFrame) -> str:
    return "".join(f"t{d} = {format_poly(t)}\n" for d, t in zip(fr.group.degrees, fr.coords))


def potential_text(P: Potential) -> str:
    return f"F = {format_poly(P.F)}\n"


# stages ---------------------------------------------------------------------


class Pipeline:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.g = cfg.group
        self.manifest = _manifest(cfg)
        self._metric = self._eta = self._frame = self._potential = None

    def _cached(self, name: str) -> Path | None:
        if self.manifest.valid(name):
            log.info("%s: using cached %s", self.g.name, name)
            return self.manifest.directory / name
        return None

    def metric(self) -> MetricTable:
        if self._metric is None:
            path = self._cached("metric.txt")
            if path:
                self._metric = read_table(self.g, path, "g", self.cfg.scale)
            else:
                log.info("%s: computing metric", self.g.name)
                self._metric = metric_table(self.g, self.cfg.scale, self.cfg.solver,
                                            self.cfg.seed, threads=self.cfg.threads)
                self.manifest.record("metric.txt", table_text(self._metric))
        return self._metric

    def eta(self) -> MetricTable:
        if self._eta is None:
            self.metric()  # upstream artifacts are repaired before any cached read
            path = self._cached("eta.txt")
            if path:
                self._eta = read_table(self.g, path, "eta", self.cfg.scale)
            else:
                self._eta = eta_table(self.metric())
                self.manifest.record("eta.txt", table_text(self._eta))
        return self._eta

    def flat(self) -> FlatFrame:
        if self._frame is None:
            path = self._cached("frame.txt")
            if path:
                coords = golden.read_entries(path, self.g.generator_ring)
                self._frame = make_frame(self.g, [coords[f"t{d}"] for d in self.g.degrees], self.eta())
            else:
                log.info("%s: solving for flat coordinates", self.g.name)
                self._frame = solve_flat(self.g, self.eta())
                self.manifest.record("frame.txt", frame_text(self._frame))
        return self._frame

    def potential(self) -> Potential:
        if self._potential is None:
            self.flat()
            path = self._cached("potential.txt")
            if path:
                F = golden.read_entries(path, self.g.flat_ring)["F"]
                self._potential = Potential(self.g, F, WeightSystem(self.g.degrees), self.g.rank - 1)
            else:
                log.info("%s: integrating the potential", self.g.name)
                self._potential = potential_from_frame(self.g, self.flat(), self.metric())
                self.manifest.record("potential.txt", potential_text(self._potential))
        return self._potential

    def verify(self, trials: int, symbolic: bool, against_fixtures: bool,
               fixture_dir: Path | None = None) -> list[Report]:
        P = self.potential()
        reports = verify_all(P, trials, self.cfg.seed, symbolic)
        try:
            f = eta_factor(P, self.flat())
            reports.append(Report("eta-factor", True, f"eta_F * eta_frame = {f} I", {"factor": f}))
        except ValueError as e:
            reports.append(Report("eta-factor", False, str(e)))
        if against_fixtures:
            reports += fixture_reports(self, fixture_dir)
        text = "".join(r.line() + "\n" for r in reports)
        self.manifest.record("verify.txt", text)
        return reports


def fixture_reports(pipe: Pipeline, directory: Path | None) -> list[Report]:
    g = pipe.g
    out = []
    bad = golden.verify_checksums(directory)
    out.append(Report("fixture-checksums", not bad, f"modified: {', '.join(bad)}" if bad else ""))
    try:
        fs = golden.load_fixtures(g.name, directory=directory)
    except golden.FixtureError as e:
        return out + [Report("fixtures", False, str(e))]
    viol = golden.grading_violations(fs)
    out.append(Report("fixture-grading", not viol, "; ".join(viol)))
    checks = []
    if fs.metric:
        checks.append(("fixture-metric", golden.compare_table(fs, "metric", pipe.metric().entries)))
    if fs.eta:
        checks.append(("fixture-eta", golden.compare_table(fs, "eta", pipe.eta().entries)))
    if fs.frame:
        checks.append(("fixture-frame", golden.compare_frame(fs, pipe.flat().coords)))
    if fs.potential is not None:
        checks.append(("fixture-potential", golden.compare_potential(fs, pipe.potential().F)))
    for name, diffs in checks:
        out.append(Report(name, not diffs, "; ".join(diffs)))
    return out


# commands -------------------------------------------------------------------


def cmd_invariants(g: GroupSpec, degree: int | None, cache: Path, max_terms: int) -> int:
    if degree is not None and degree not in g.degrees:
        raise UsageError(f"{g.name} has no basic invariant of degree {degree} "
                         f"(degrees {', '.join(map(str, g.degrees))})")
    degrees = [degree] if degree is not None else list(g.degrees)
    big = [(d, homogeneous_monomials(g.rank, d)) for d in degrees
           if homogeneous_monomials(g.rank, d) > max_terms]
    if big:
        desc = ", ".join(f"{g.letter}{d} (up to {n} terms)" for d, n in big)
        raise UsageError(f"expansion too large: {desc}; pass --degree or raise --max-terms")
    out = cache / g.name / "invariants"
    manifest = RunManifest(out, {"tool": "coxflat", "version": __version__, "group": g.name,
                                 "variables": ",".join(g.chart_ring.names),
                                 "quad_normalizer": str(g.quad_normalizer)})
    for d in degrees:
        p = build_basic_invariant(g, d)
        manifest.record(f"{g.letter}{d}.txt", f"{g.letter}{d} = {format_poly(p)}\n")
        print(f"{g.letter}{d}: {len(p)} terms")
    return EXIT_OK


def _fraction(text: str) -> Fraction:
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text}")
    if q <= 0:
        raise argparse.ArgumentTypeError("metric scale must be positive")
    return q


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("group", nargs="?", help=f"one of {', '.join(GROUP_NAMES)}")
    common.add_argument("--group", dest="group_opt", metavar="GROUP")
    common.add_argument("--cache", type=Path, default=None,
                        help="cache directory (env COXFLAT_CACHE, default ./coxflat-cache)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="coxflat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"coxflat {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    inv = sub.add_parser("invariants", parents=[common], help="write the basic invariants")
    inv.add_argument("--degree", type=int)
    inv.add_argument("--max-terms", type=int, default=DEFAULT_MAX_TERMS)

    for stage in STAGES:
        s = sub.add_parser(stage, parents=[common], help=f"run the pipeline up to '{stage}'")
        s.add_argument("--solver", choices=("exact", "modular"), default="modular")
        s.add_argument("--threads", type=_positive, default=None,
                       help="worker processes (env COXFLAT_THREADS, default 1)")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--metric-scale", type=_fraction, default=Fraction(2))
        if stage == "verify":
            s.add_argument("--trials", type=_positive, default=50)
            s.add_argument("--symbolic-wdvv", action="store_true")
            s.add_argument("--against-fixtures", action="store_true")
            s.add_argument("--fixtures", type=Path, default=None, help=argparse.SUPPRESS)
    return p


def _resolve_group(args) -> GroupSpec:
    name = args.group_opt or args.group
    if args.group_opt and args.group and args.group_opt != args.group:
        raise UsageError("conflicting group arguments")
    if not name:
        raise UsageError("a group is required")
    try:
        return group_spec(name)
    except UnknownGroup:
        raise UsageError(f"unknown group {name!r} (known: {', '.join(GROUP_NAMES)})")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        g = _resolve_group(args)
        cache = args.cache or Path(os.environ.get("COXFLAT_CACHE", "coxflat-cache"))
        if args.command == "invariants":
            return cmd_invariants(g, args.degree, cache, args.max_terms)
        threads = args.threads or int(os.environ.get("COXFLAT_THREADS", "1"))
        if threads < 1:
            raise UsageError("COXFLAT_THREADS must be at least 1")
        cfg = RunConfig(g, args.metric_scale, args.seed, args.solver, threads, cache)
        pipe = Pipeline(cfg)
        if args.command == "metric":
            pipe.metric()
        elif args.command == "eta":
            pipe.eta()
        elif args.command == "flat":
            fr = pipe.flat()
            print(f"antidiagonal {fr.antidiagonal}; scales {', '.join(map(str, fr.scale_factors))}")
        elif args.command == "potential":
            print(f"F: {len(pipe.potential().F)} terms")
        else:
            reports = pipe.verify(args.trials, args.symbolic_wdvv, args.against_fixtures, args.fixtures)
            for r in reports:
                print(r.line())
            failed = [r for r in reports if not r.passed]
            if failed:
                print(f"first failure: {failed[0].name}", file=sys.stderr)
                return EXIT_FAIL
        print(f"{args.command} {g.name}: ok ({cfg.run_dir})")
        return EXIT_OK
    except UsageError as e:
        print(f"coxflat: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InterpolationError, IntegrabilityError, FlatSolveError, DimensionMismatch) as e:
        print(f"coxflat: internal inconsistency: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
