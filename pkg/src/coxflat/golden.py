"""Published reference data (metric, eta, flat frames, potentials).

Fixtures are stored verbatim in canonical text, one ``key = poly`` per line.
A few printed terms have a weighted degree that cannot occur in their entry;
``errata.txt`` lists the degree-forced corrections and the loader refuses any
erratum that is not forced by grading alone.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .groups import GroupSpec, group_spec
from .polycore import Poly, parse_poly

KINDS = ("metric", "eta", "frame", "potential")


class FixtureError(ValueError):
    pass


def fixture_dir() -> Path:
    return Path(str(resources.files("coxflat") / "fixtures"))


@dataclass(frozen=True)
class Erratum:
    group: str
    kind: str
    key: str
    printed: str
    corrected: str  # "0" deletes the term


@dataclass
class FixtureSet:
    group: GroupSpec
    entries: dict[str, dict[str, Poly]] = field(default_factory=dict)  # kind -> key -> poly
    applied: list[Erratum] = field(default_factory=list)

    def kind(self, kind: str) -> dict[str, Poly]:
        return self.entries.get(kind, {})

    @property
    def metric(self) -> dict[str, Poly]:
        return self.kind("metric")

    @property
    def eta(self) -> dict[str, Poly]:
        return self.kind("eta")

    @property
    def frame(self) -> dict[str, Poly]:
        return self.kind("frame")

    @property
    def potential(self) -> Poly | None:
        return self.kind("potential").get("F")


def _ring(g: GroupSpec, kind: str):
    return g.flat_ring if kind == "potential" else g.generator_ring


def read_entries(path: Path, ring) -> dict[str, Poly]:
    out = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, text = line.partition(" = ")
        if not sep:
            raise FixtureError(f"{path.name}:{lineno}: expected 'key = poly'")
        if key in out:
            raise FixtureError(f"{path.name}:{lineno}: duplicate key {key}")
        out[key] = parse_poly(text, ring)
    return out


def load_errata(directory: Path | None = None) -> list[Erratum]:
    path = (directory or fixture_dir()) / "errata.txt"
    out = []
    for line in path.read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        head, _, body = line.partition(" : ")
        group, kind, key = head.split()
        printed, _, corrected = body.partition(" -> ")
        out.append(Erratum(group, kind, key, printed.strip(), corrected.strip()))
    return out


def expected_degree(g: GroupSpec, kind: str, key: str) -> int:
    if kind == "potential":
        return 2 * g.h + 2
    if kind == "frame":
        return int(key[1:])
    a, b = (int(x[1:]) for x in key.split(","))
    return a + b - 2 - (g.h if kind == "eta" else 0)


def grading_violations(fs: FixtureSet) -> list[str]:
    out = []
    for kind, table in fs.entries.items():
        for key, p in table.items():
            want = expected_degree(fs.group, kind, key)
            ring = p.ring
            for m, c in p.items():
                if ring.wdeg(m) != want:
                    out.append(f"{fs.group.name} {kind} {key}: term {c} {m} has degree {ring.wdeg(m)}, not {want}")
    return out


def _apply(fs: FixtureSet, e: Erratum) -> None:
    g = fs.group
    ring = _ring(g, e.kind)
    table = fs.entries[e.kind]
    if e.key not in table:
        raise FixtureError(f"erratum for missing entry {e.key}")
    printed = parse_poly(e.printed, ring)
    corrected = parse_poly(e.corrected, ring)
    want = expected_degree(g, e.kind, e.key)
    if len(printed) != 1 or len(corrected) > 1:
        raise FixtureError("errata replace single terms")
    (pm, pc), = printed.items()
    if ring.wdeg(pm) == want:
        raise FixtureError(f"erratum {e} is not forced by grading")
    if corrected:
        (cm, cc), = corrected.items()
        if cc != pc or ring.wdeg(cm) != want:
            raise FixtureError(f"erratum {e} must keep the coefficient and fix the degree")
    if table[e.key].coeff(pm) != pc:
        raise FixtureError(f"erratum {e} does not match the fixture")
    table[e.key] = table[e.key] - printed + corrected
    fs.applied.append(e)


def load_fixtures(name: str, errata: bool = True, directory: Path | None = None) -> FixtureSet:
    g = group_spec(name)
    base = (directory or fixture_dir())
    if not (base / name).is_dir():
        raise FixtureError(f"no fixtures for {name}")
    fs = FixtureSet(g)
    for kind in KINDS:
        path = base / name / f"{kind}.txt"
        if path.exists():
            fs.entries[kind] = read_entries(path, _ring(g, kind))
    if errata:
        for e in load_errata(base):
            if e.group == name:
                _apply(fs, e)
    return fs


def fixture_groups(directory: Path | None = None) -> list[str]:
    base = directory or fixture_dir()
    return sorted(p.name for p in base.iterdir() if p.is_dir() and not p.name.startswith("_"))


# checksums ------------------------------------------------------------------


def _data_files(base: Path) -> list[Path]:
    return sorted(p for p in base.rglob("*.txt"))


def compute_checksums(directory: Path | None = None) -> dict[str, str]:
    base = directory or fixture_dir()
    return {str(p.relative_to(base)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in _data_files(base)}


def verify_checksums(directory: Path | None = None) -> list[str]:
    """Files whose content differs from SHA256SUMS (empty when intact)."""
    base = directory or fixture_dir()
    recorded = {}
    for line in (base / "SHA256SUMS").read_text().splitlines():
        digest, _, rel = line.partition("  ")
        recorded[rel] = digest
    actual = compute_checksums(base)
    return sorted(k for k in set(recorded) | set(actual) if recorded.get(k) != actual.get(k))


def write_checksums(directory: Path | None = None) -> None:
    base = directory or fixture_dir()
    lines = [f"{d}  {rel}\n" for rel, d in sorted(compute_checksums(base).items())]
    (base / "SHA256SUMS").write_text("".join(lines))


# comparison -----------------------------------------------------------------


def diff_polys(label: str, expected: Poly, actual: Poly) -> list[str]:
    """One line per differing coefficient."""
    out = []
    for m, c in (expected - actual).items():
        names = "*".join(f"{v}^{e}" if e > 1 else v for v, e in zip(expected.ring.names, m) if e) or "1"
        out.append(f"{label}: coefficient of {names} is {actual.coeff(m)}, expected {expected.coeff(m)}")
    return out


def table_key(g: GroupSpec, a: int, b: int) -> str:
    return f"{g.letter}{g.degrees[a]},{g.letter}{g.degrees[b]}"


def compare_table(fs: FixtureSet, kind: str, entries) -> list[str]:
    g = fs.group
    out = []
    for key, want in fs.kind(kind).items():
        a, b = (g.degrees.index(int(x[1:])) for x in key.split(","))
        out += diff_polys(f"{kind} {key}", want, entries[a][b])
    return out


def compare_frame(fs: FixtureSet, coords) -> list[str]:
    g = fs.group
    out = []
    for key, want in fs.frame.items():
        out += diff_polys(f"frame {key}", want, coords[g.degrees.index(int(key[1:]))])
    return out


def compare_potential(fs: FixtureSet, F: Poly) -> list[str]:
    if fs.potential is None:
        return []
    return diff_polys("potential", fs.potential, F)
