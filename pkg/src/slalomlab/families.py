"""Named slalom families: seeded generation, the sectioned config
format, and canonical serialization with digests.

Generation is deterministic per seed through the fixed SplitMix64
stream, so a family regenerates bit-exactly from its spec; the digest
of the canonical serialization is what reports echo.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .rng import SplitMix64
from .slaloms import GeometricTail, PathReal, Slalom, SlalomError, width


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NamedSlalom:
    name: str
    slalom: Slalom
    provenance: str


@dataclass(frozen=True)
class FamilySpec:
    name: str
    horizon: int
    members: tuple[NamedSlalom, ...]
    seed: Optional[int] = None

    def __post_init__(self):
        names = [m.name for m in self.members]
        if len(set(names)) != len(names):
            raise ConfigError(f"family {self.name}: duplicate member names")
        for m in self.members:
            if m.slalom.horizon != self.horizon:
                raise ConfigError(
                    f"family {self.name}: member {m.name} has horizon "
                    f"{m.slalom.horizon}, family says {self.horizon}")

    def member(self, name: str) -> Slalom:
        for m in self.members:
            if m.name == name:
                return m.slalom
        raise ConfigError(f"family {self.name} has no member {name!r}")

    def slaloms(self) -> list[Slalom]:
        return [m.slalom for m in self.members]


# -- seeded generators ----------------------------------------------------------


COLUMN_SPAN = 1 << 12


def _span(n: int) -> int:
    """Columns are drawn below this bound: the full level when small,
    else a fixed low span (keeps masks small; admissibility never needs
    high columns)."""
    return min(width(n), COLUMN_SPAN)


def random_w_member(horizon: int, rng: SplitMix64, max_cols: int = 3,
                    start_level: int = 1) -> Slalom:
    """Sparse random slalom: at each level from start_level on, up to
    max_cols columns (never saturating), placed uniformly in the span."""
    masks = [0] * horizon
    for n in range(start_level, horizon):
        size = rng.below(1 + min(max_cols, width(n) - 1))
        masks[n] = rng.subset_mask(_span(n), size)
    return Slalom(tuple(masks))


def random_z_member(horizon: int, rng: SplitMix64, start_level: int = 1) -> Slalom:
    """Random slalom with per-level density at most 1/(n+2), so cutoffs
    for fixed thresholds settle early."""
    masks = [0] * horizon
    for n in range(start_level, horizon):
        cap = min(width(n) // (n + 2), width(n) - 1, 8)
        size = rng.below(1 + cap)
        masks[n] = rng.subset_mask(_span(n), size)
    return Slalom(tuple(masks))


def random_bucket_member(horizon: int, rng: SplitMix64, cutoff: int,
                         prefix: Slalom, threshold: Fraction = Fraction(1, 9),
                         max_cols: int = 6) -> Slalom:
    """A member for refinement buckets: the shared prefix below the
    cutoff, strictly under the density threshold from it on."""
    masks = list(prefix.masks[:cutoff]) + [0] * (horizon - cutoff)
    for n in range(cutoff, horizon):
        cap = (width(n) * threshold.numerator) // threshold.denominator
        if cap * threshold.denominator == width(n) * threshold.numerator:
            cap -= 1  # strict inequality
        cap = max(min(cap, max_cols), 0)
        size = rng.below(1 + cap) if cap else 0
        masks[n] = rng.subset_mask(_span(n), size)
    return Slalom(tuple(masks))


def random_path(horizon: int, rng: SplitMix64) -> PathReal:
    return PathReal(tuple(rng.below(width(n)) for n in range(horizon)))


# -- config text format ----------------------------------------------------------


def _parse_levels(text: str, horizon: int) -> dict[int, list[int]]:
    levels: dict[int, list[int]] = {}
    for chunk in text.replace("\n", ";").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigError(f"level entry {chunk!r} needs 'level: cols'")
        lvl, cols = chunk.split(":", 1)
        n = int(lvl)
        levels[n] = [int(c) for c in cols.split()]
    return levels


def _parse_tail(text: str) -> Optional[GeometricTail]:
    parts = text.split()
    if parts[0] == "empty":
        return None
    if parts[0] == "geometric" and len(parts) == 3:
        return GeometricTail(int(parts[1]), Fraction(parts[2]))
    raise ConfigError(f"bad tail spec {text!r}")


@dataclass
class ConfigData:
    families: dict[str, FamilySpec]
    paths: dict[str, list[PathReal]]
    run: dict[str, str]
    text: str

    def family(self, name: str) -> FamilySpec:
        if name not in self.families:
            raise ConfigError(f"no family named {name!r}")
        return self.families[name]

    def resolve_member(self, ref: str) -> Slalom:
        """A member reference: 'family.member' or a single-member family name."""
        if "." in ref:
            fam, member = ref.rsplit(".", 1)
            if fam in self.families:
                return self.family(fam).member(member)
        spec = self.family(ref)
        if len(spec.members) != 1:
            raise ConfigError(f"{ref!r} is a whole family; pick a member")
        return spec.members[0].slalom


def parse_config(text: str) -> ConfigData:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from e
    families: dict[str, FamilySpec] = {}
    paths: dict[str, list[PathReal]] = {}
    for section in cp.sections():
        if not section.startswith("family."):
            continue
        name = section[len("family."):]
        opts = cp[section]
        kind = opts.get("kind", "table")
        horizon = opts.getint("horizon", fallback=None)
        if horizon is None:
            raise ConfigError(f"family {name}: horizon is required")
        seed = opts.getint("seed", fallback=None)
        tail = _parse_tail(opts.get("tail", "empty"))
        members: list[NamedSlalom] = []
        try:
            if kind == "table":
                levels = _parse_levels(opts.get("levels", ""), horizon)
                members.append(NamedSlalom(
                    name, Slalom.from_levels(horizon, levels, tail), "table"))
            elif kind == "graph":
                vals = [int(v) for v in opts.get("values", "").split()]
                if len(vals) != horizon:
                    raise ConfigError(f"family {name}: need {horizon} path values")
                from .slaloms import graph_of
                path = PathReal(tuple(vals))
                paths[name] = [path]
                members.append(NamedSlalom(name, graph_of(path), "graph-of-path"))
            elif kind in ("random-w", "random-z"):
                if seed is None:
                    raise ConfigError(f"family {name}: random kinds need a seed")
                count = opts.getint("count", fallback=1)
                rng = SplitMix64(seed)
                gen = random_w_member if kind == "random-w" else random_z_member
                for i in range(count):
                    members.append(NamedSlalom(f"{i}", gen(horizon, rng), "rule"))
            elif kind == "random-bucket":
                if seed is None:
                    raise ConfigError(f"family {name}: random kinds need a seed")
                count = opts.getint("count", fallback=2)
                cutoff = opts.getint("cutoff", fallback=1)
                prefix = Slalom.from_levels(
                    cutoff, _parse_levels(opts.get("prefix-levels", ""), cutoff))
                rng = SplitMix64(seed)
                for i in range(count):
                    members.append(NamedSlalom(
                        f"{i}", random_bucket_member(horizon, rng, cutoff, prefix),
                        "rule"))
            elif kind == "paths":
                if seed is not None:
                    count = opts.getint("count", fallback=1)
                    rng = SplitMix64(seed)
                    paths[name] = [random_path(horizon, rng) for _ in range(count)]
                else:
                    rows = [r.strip() for r in opts.get("values", "").split(";") if r.strip()]
                    paths[name] = [PathReal(tuple(int(v) for v in r.split())) for r in rows]
                continue
            else:
                raise ConfigError(f"family {name}: unknown kind {kind!r}")
        except SlalomError as e:
            raise ConfigError(f"family {name}: {e}") from e
        families[name] = FamilySpec(name, horizon, tuple(members), seed)
    run = dict(cp["run"]) if cp.has_section("run") else {}
    return ConfigData(families, paths, run, text)


# -- canonical serialization and digests --------------------------------------------


def serialize_slalom(s: Slalom) -> str:
    parts = [f"h={s.horizon}"]
    for n, m in enumerate(s.masks):
        if m:
            parts.append(f"{n}:{m:x}")
    if s.tail is not None:
        parts.append(f"tail=geometric,{s.tail.first_level},"
                     f"{s.tail.bound.numerator}/{s.tail.bound.denominator}")
    return ";".join(parts)


def deserialize_slalom(text: str) -> Slalom:
    parts = text.split(";")
    horizon = None
    masks: dict[int, int] = {}
    tail = None
    for part in parts:
        if part.startswith("h="):
            horizon = int(part[2:])
        elif part.startswith("tail=geometric,"):
            _, first, bound = part[len("tail="):].split(",")
            tail = GeometricTail(int(first), Fraction(bound))
        elif part:
            lvl, mask = part.split(":")
            masks[int(lvl)] = int(mask, 16)
    if horizon is None:
        raise ConfigError("missing horizon in serialized slalom")
    out = [masks.get(n, 0) for n in range(horizon)]
    return Slalom(tuple(out), tail)


def serialize_family(spec: FamilySpec) -> str:
    lines = [f"family {spec.name} horizon={spec.horizon} seed={spec.seed}"]
    for m in spec.members:
        lines.append(f"  {m.name} [{m.provenance}] {serialize_slalom(m.slalom)}")
    return "\n".join(lines) + "\n"


def deserialize_family(text: str) -> FamilySpec:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "family":
        raise ConfigError("not a serialized family")
    name = head[1]
    horizon = int(head[2].split("=")[1])
    seed_text = head[3].split("=")[1]
    seed = None if seed_text == "None" else int(seed_text)
    members = []
    for ln in lines[1:]:
        mname, rest = ln.strip().split(" ", 1)
        prov, body = rest.split("] ", 1)
        members.append(NamedSlalom(mname, deserialize_slalom(body), prov[1:]))
    return FamilySpec(name, horizon, tuple(members), seed)


def family_digest(spec: FamilySpec) -> str:
    return hashlib.sha256(serialize_family(spec).encode()).hexdigest()
