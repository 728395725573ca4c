"""Domain model for two-database linkage experiments.

A record splits into an opaque record identifier, quasi-identifier (QID)
attributes used for comparison, and payload data (PD) carried through to
analysis outputs. Databases are immutable once constructed; loaders
validate shape and id uniqueness up front. The module also ships a seeded
synthetic corpus generator for desk-scale runs.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from random import Random

from .errors import ConfigError, DerivationError, IntegrityError, ParseError

log = logging.getLogger(__name__)

RecordId = str

_WEIGHT_TOL = 1e-9

# Two-digit years at or above the pivot map to the 1900s, below to the 2000s.
_YEAR_PIVOT = 30


def derive_age(dob: str, reference_year: int) -> str:
    """Age in whole years at reference_year for a dd/mm/yy date string.

    Day of year is ignored: the result is reference_year minus birth year.
    Raises DerivationError for anything that is not a valid calendar date.
    """
    parts = dob.split("/")
    if len(parts) != 3 or not all(p.isdigit() and len(p) == 2 for p in parts):
        raise DerivationError(f"expected a dd/mm/yy date, got {dob!r}")
    day, month, two_digit_year = (int(p) for p in parts)
    year = 1900 + two_digit_year if two_digit_year >= _YEAR_PIVOT else 2000 + two_digit_year
    try:
        date(year, month, day)
    except ValueError as exc:
        raise DerivationError(f"invalid calendar date {dob!r}: {exc}") from None
    return str(reference_year - year)


@dataclass(frozen=True)
class DerivedRule:
    """Rule appending a computed attribute to each record's payload."""

    kind: str
    source_attr: str
    target_attr: str
    reference_year: int = 2025

    def __post_init__(self):
        if self.kind != "age_from_dob":
            raise ConfigError(f"unknown derived-attribute kind {self.kind!r}")

    def apply(self, source_value: str) -> str:
        return derive_age(source_value, self.reference_year)


@dataclass(frozen=True)
class Schema:
    """Column layout of a database: weighted QID attributes, PD attributes,
    and rules for derived PD attributes."""

    qid_attrs: tuple[tuple[str, float], ...]
    pd_attrs: tuple[str, ...]
    derived: tuple[DerivedRule, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "qid_attrs", tuple((str(n), float(w)) for n, w in self.qid_attrs))
        object.__setattr__(self, "pd_attrs", tuple(self.pd_attrs))
        object.__setattr__(self, "derived", tuple(self.derived))
        if not self.qid_attrs:
            raise ConfigError("schema needs at least one QID attribute")
        names = [n for n, _ in self.qid_attrs]
        names += list(self.pd_attrs)
        names += [r.target_attr for r in self.derived]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ConfigError(f"duplicate attribute names: {duplicates}")
        for name, weight in self.qid_attrs:
            if not 0.0 <= weight <= 1.0:
                raise ConfigError(f"comparison weight for {name!r} outside [0, 1]: {weight}")
        total = sum(w for _, w in self.qid_attrs)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ConfigError(f"comparison weights sum to {total}, expected 1.0")
        known = {n for n, _ in self.qid_attrs} | set(self.pd_attrs)
        for rule in self.derived:
            if rule.source_attr not in known:
                raise ConfigError(f"derived rule source {rule.source_attr!r} not in schema")

    @property
    def qid_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.qid_attrs)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.qid_attrs)

    @property
    def pd_names(self) -> tuple[str, ...]:
        """All payload attribute names, derived targets last."""
        return self.pd_attrs + tuple(r.target_attr for r in self.derived)


@dataclass(frozen=True)
class Record:
    id: RecordId
    qid: tuple[str, ...]
    pd: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "qid", tuple(self.qid))
        object.__setattr__(self, "pd", tuple(self.pd))
        if not self.id:
            raise IntegrityError("record id must be non-empty")


@dataclass(frozen=True)
class Database:
    name: str
    schema: Schema
    records: tuple[Record, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        n_qid = len(self.schema.qid_attrs)
        n_pd = len(self.schema.pd_names)
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise IntegrityError(f"duplicate record id {rec.id!r} in database {self.name!r}")
            seen.add(rec.id)
            if len(rec.qid) != n_qid:
                raise IntegrityError(
                    f"record {rec.id!r}: expected {n_qid} QID values, got {len(rec.qid)}"
                )
            if len(rec.pd) != n_pd:
                raise IntegrityError(
                    f"record {rec.id!r}: expected {n_pd} PD values, got {len(rec.pd)}"
                )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> tuple[RecordId, ...]:
        return tuple(r.id for r in self.records)

    def record_map(self) -> dict[RecordId, Record]:
        return {r.id: r for r in self.records}


@dataclass(frozen=True)
class GroundTruth:
    """Known co-referring record pairs between two databases, one-to-one."""

    pairs: frozenset[tuple[RecordId, RecordId]]

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset((a, b) for a, b in self.pairs))
        lefts = [a for a, _ in self.pairs]
        rights = [b for _, b in self.pairs]
        if len(set(lefts)) != len(lefts) or len(set(rights)) != len(rights):
            raise IntegrityError("ground truth must be one-to-one")

    def __len__(self) -> int:
        return len(self.pairs)


def _attr_value(schema: Schema, qid: tuple[str, ...], pd: list[str], attr: str) -> str:
    if attr in schema.qid_names:
        return qid[schema.qid_names.index(attr)]
    return pd[schema.pd_attrs.index(attr)]


def load_database(path, schema: Schema, name: str | None = None) -> Database:
    """Read a CSV into a Database, applying the schema's derived rules.

    The header must be exactly `id` followed by the schema's QID and PD
    attribute names. Unparseable derivation sources leave the derived
    value empty and log a warning.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: missing header row") from None
        expected = ["id", *schema.qid_names, *schema.pd_attrs]
        if header != expected:
            raise ParseError(f"{path}: header {header} does not match schema columns {expected}")
        n_qid = len(schema.qid_names)
        records = []
        for row_num, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise ParseError(
                    f"{path}: row {row_num}: expected {len(expected)} fields, got {len(row)}"
                )
            qid = tuple(row[1 : 1 + n_qid])
            pd = list(row[1 + n_qid :])
            for rule in schema.derived:
                source = _attr_value(schema, qid, pd, rule.source_attr)
                try:
                    pd.append(rule.apply(source))
                except DerivationError as exc:
                    log.warning("%s: row %d: %s", path, row_num, exc)
                    pd.append("")
            records.append(Record(row[0], qid, tuple(pd)))
    return Database(name or path.stem, schema, tuple(records))


def write_database(db: Database, path) -> None:
    """Write the declared columns of a database as CSV (derived PD is
    recomputed on load, so it is not written)."""
    declared = len(db.schema.pd_attrs)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", *db.schema.qid_names, *db.schema.pd_attrs])
        for rec in db.records:
            writer.writerow([rec.id, *rec.qid, *rec.pd[:declared]])


def load_schema(path) -> Schema:
    """Parse a schema file: one `qid <name> <weight>`, `pd <name>`, or
    `derived <kind> <source> <target> [reference_year]` entry per line."""
    path = Path(path)
    qid_attrs: list[tuple[str, float]] = []
    pd_attrs: list[str] = []
    derived: list[DerivedRule] = []
    for line_num, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        kind = fields[0]
        try:
            if kind == "qid" and len(fields) == 3:
                qid_attrs.append((fields[1], float(fields[2])))
            elif kind == "pd" and len(fields) == 2:
                pd_attrs.append(fields[1])
            elif kind == "derived" and len(fields) in (4, 5):
                year = int(fields[4]) if len(fields) == 5 else 2025
                derived.append(DerivedRule(fields[1], fields[2], fields[3], year))
            else:
                raise ParseError(f"{path}: line {line_num}: unrecognized entry {line!r}")
        except ValueError as exc:
            raise ParseError(f"{path}: line {line_num}: {exc}") from None
    try:
        return Schema(tuple(qid_attrs), tuple(pd_attrs), tuple(derived))
    except ConfigError as exc:
        raise ParseError(f"{path}: {exc}") from None


def write_schema(schema: Schema, path) -> None:
    lines = [f"qid {name} {weight}" for name, weight in schema.qid_attrs]
    lines += [f"pd {name}" for name in schema.pd_attrs]
    lines += [
        f"derived {r.kind} {r.source_attr} {r.target_attr} {r.reference_year}"
        for r in schema.derived
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_ground_truth(path) -> GroundTruth:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id_a", "id_b"]:
            raise ParseError(f"{path}: expected header id_a,id_b, got {header}")
        return GroundTruth(frozenset((row[0], row[1]) for row in reader))


def write_ground_truth(truth: GroundTruth, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id_a", "id_b"])
        for id_a, id_b in sorted(truth.pairs):
            writer.writerow([id_a, id_b])


# Synthetic corpus generation. Name pools are deliberately small so that
# desk-scale corpora still contain near-miss non-matches.

_FIRST_NAMES = (
    "John", "Mary", "Peter", "Sarah", "Amelia", "Noah", "Olivia", "Liam",
    "Emma", "Jack", "Sophie", "Henry", "Grace", "Oscar", "Ruby", "Thomas",
    "Isla", "Lucas", "Chloe", "Ethan", "Mia", "Daniel", "Zoe", "Samuel",
)
_LAST_NAMES = (
    "Eliott", "Smith", "Brown", "Wilson", "Taylor", "Johnson", "White",
    "Martin", "Anderson", "Thompson", "Nguyen", "Walker", "Harris", "Lewis",
    "Robinson", "Clark", "Young", "Wright", "Mitchell", "Turner", "Baker",
    "Hall", "Moore", "King",
)
_CITIES = (
    "London", "Manchester", "Bristol", "Leeds", "Sheffield", "Liverpool",
    "Oxford", "Cambridge", "York", "Bath", "Exeter", "Norwich", "Durham",
    "Brighton", "Cardiff", "Glasgow",
)

OCCUPATIONS = (
    "Accountant", "Bartender", "CEO", "Chef", "Engineer",
    "Farmer", "Journalist", "Nurse", "Plumber", "Teacher",
)

SYNTHETIC_SCHEMA = Schema(
    qid_attrs=(("FirstN", 0.3), ("LastN", 0.3), ("City", 0.2), ("DoB", 0.2)),
    pd_attrs=("Occupation", "Income", "Score"),
)

_LETTERS = "abcdefghijklmnopqrstuvwxyz"
_DIGITS = "0123456789"


def _random_char_like(original: str, rng: Random) -> str:
    pool = _DIGITS if original.isdigit() else _LETTERS
    replacement = rng.choice(pool)
    while replacement == original.lower():
        replacement = rng.choice(pool)
    return replacement


def _corrupt_value(value: str, typo_rate: float, rng: Random) -> str:
    """Apply substitute/insert/delete/transpose edits, each character
    position mutating independently with probability typo_rate."""
    chars = list(value)
    out: list[str] = []
    i = 0
    while i < len(chars):
        char = chars[i]
        if rng.random() < typo_rate:
            edit = rng.choice(("substitute", "insert", "delete", "transpose"))
            if edit == "substitute":
                out.append(_random_char_like(char, rng))
                i += 1
            elif edit == "insert":
                out.append(char)
                out.append(_random_char_like(char, rng))
                i += 1
            elif edit == "delete":
                i += 1
            elif i + 1 < len(chars):
                out.append(chars[i + 1])
                out.append(char)
                i += 2
            else:
                out.append(char)
                i += 1
        else:
            out.append(char)
            i += 1
    return "".join(out)


def _random_dob(rng: Random) -> str:
    return f"{rng.randint(1, 28):02d}/{rng.randint(1, 12):02d}/{rng.randint(0, 99):02d}"


def _random_pd(rng: Random) -> tuple[str, str, str]:
    occupation = rng.choice(OCCUPATIONS)
    income = str(rng.randrange(20_000, 150_001))
    score = f"{rng.uniform(0, 100):.1f}"
    return occupation, income, score


def gen_synthetic_corpus(
    n_a: int,
    n_b: int,
    overlap: float,
    typo_rate: float,
    seed: int,
) -> tuple[Database, Database, GroundTruth]:
    """Generate two person databases with a known overlap.

    Exactly round(overlap * min(n_a, n_b)) ground-truth pairs are planted.
    The second database's copies of overlapping records get typo-corrupted
    QID values; PD values are drawn independently per database. Output is
    a pure function of the arguments.
    """
    if n_a < 0 or n_b < 0:
        raise ConfigError("database sizes must be non-negative")
    if not 0.0 <= overlap <= 1.0:
        raise ConfigError(f"overlap must be in [0, 1], got {overlap}")
    if not 0.0 <= typo_rate <= 1.0:
        raise ConfigError(f"typo_rate must be in [0, 1], got {typo_rate}")
    rng = Random(seed)
    n_overlap = round(overlap * min(n_a, n_b))

    # Distinct QID tuples across the whole corpus: non-matching records can
    # never collide at similarity 1.0.
    persons: list[tuple[str, str, str, str]] = []
    seen: set[tuple[str, str, str, str]] = set()
    while len(persons) < n_a + n_b - n_overlap:
        candidate = (
            rng.choice(_FIRST_NAMES),
            rng.choice(_LAST_NAMES),
            rng.choice(_CITIES),
            _random_dob(rng),
        )
        if candidate not in seen:
            seen.add(candidate)
            persons.append(candidate)

    records_a = [
        Record(f"A{i + 1}", persons[i], _random_pd(rng)) for i in range(n_a)
    ]

    overlap_indices = sorted(rng.sample(range(n_a), n_overlap))
    b_sources: list[tuple[str, int]] = [("overlap", i) for i in overlap_indices]
    b_sources += [("fresh", n_a + j) for j in range(n_b - n_overlap)]
    rng.shuffle(b_sources)

    records_b = []
    gt_pairs = set()
    for j, (origin, idx) in enumerate(b_sources):
        b_id = f"B{j + 1}"
        qid = persons[idx]
        if origin == "overlap":
            qid = tuple(_corrupt_value(v, typo_rate, rng) for v in qid)
            gt_pairs.add((f"A{idx + 1}", b_id))
        records_b.append(Record(b_id, qid, _random_pd(rng)))

    db_a = Database("synthetic_a", SYNTHETIC_SCHEMA, tuple(records_a))
    db_b = Database("synthetic_b", SYNTHETIC_SCHEMA, tuple(records_b))
    return db_a, db_b, GroundTruth(frozenset(gt_pairs))
