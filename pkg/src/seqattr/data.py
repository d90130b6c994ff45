"""Loading, schema inference, binning, and encoding of labeled event sequences.

Input is long format: one event per row with required columns `id`,
`t` (1-based integer timestep), `label` (`pos` | `neg`), plus one column
per attribute.  Attribute kinds are inferred on load (categorical,
ordinal, or numerical with quantile bins) and can be overridden per
attribute through a sidecar mapping.

Encoding produces one vector per event: a one-hot block per
categorical/ordinal attribute concatenated with one min-max scaled
scalar per numerical attribute.  Binned value levels (used by the
attribution heatmaps) and the scaled scalars fed to the model are kept
as two separate views of the same raw value.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

CATEGORICAL = "categorical"
ORDINAL = "ordinal"
NUMERICAL = "numerical"

LABEL_POS = "pos"
LABEL_NEG = "neg"
LABELS = (LABEL_POS, LABEL_NEG)

RESERVED_COLUMNS = ("id", "t", "label")


class DataError(ValueError):
    """Base class for dataset loading and validation failures."""


class ParseError(DataError):
    """A row or line could not be parsed."""


class SchemaError(DataError):
    """Schema inference or schema overrides failed."""


class IntegrityError(DataError):
    """Rows parse individually but are inconsistent as a dataset."""


class BoundsError(DataError):
    """An instance exceeds the declared maximum sequence length."""


class UnknownLevelError(DataError):
    """A categorical/ordinal value does not match any schema level."""


@dataclass(frozen=True)
class AttributeSchema:
    """One attribute: its kind and the discrete value levels used for display.

    Categorical and ordinal attributes carry an ordered `levels` tuple;
    numerical attributes carry strictly ascending `bin_edges` defining
    half-open bins [e_k, e_{k+1}) (the last bin is closed above).
    """

    name: str
    kind: str
    levels: tuple = None
    bin_edges: tuple = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in (CATEGORICAL, ORDINAL, NUMERICAL):
            raise SchemaError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == NUMERICAL:
            if self.levels is not None or not self.bin_edges:
                raise SchemaError(f"attribute {self.name!r}: numerical needs bin_edges only")
            edges = tuple(float(e) for e in self.bin_edges)
            if len(edges) < 2 or any(not np.isfinite(e) for e in edges):
                raise SchemaError(f"attribute {self.name!r}: need >= 2 finite bin edges")
            if any(a >= b for a, b in zip(edges, edges[1:])):
                raise SchemaError(f"attribute {self.name!r}: bin edges must be strictly ascending")
            object.__setattr__(self, "bin_edges", edges)
        else:
            if self.bin_edges is not None or not self.levels:
                raise SchemaError(f"attribute {self.name!r}: {self.kind} needs levels only")
            levels = tuple(self.levels)
            if len(set(levels)) != len(levels):
                raise SchemaError(f"attribute {self.name!r}: duplicate levels")
            object.__setattr__(self, "levels", levels)
            object.__setattr__(self, "_index", {lv: i for i, lv in enumerate(levels)})

    @property
    def level_count(self) -> int:
        if self.kind == NUMERICAL:
            return len(self.bin_edges) - 1
        return len(self.levels)

    def level_labels(self) -> list:
        """Display labels for each level, ascending."""
        if self.kind == NUMERICAL:
            e = self.bin_edges
            return [f"[{e[i]:g}, {e[i + 1]:g})" for i in range(len(e) - 1)]
        return [str(lv) for lv in self.levels]

    def value_range(self) -> tuple:
        """(lo, hi) of the training range; numerical attributes only."""
        if self.kind != NUMERICAL:
            raise SchemaError(f"attribute {self.name!r} is not numerical")
        return self.bin_edges[0], self.bin_edges[-1]


@dataclass(frozen=True)
class Event:
    """Raw attribute values for one timestep, pre-binning."""

    values: tuple


@dataclass(frozen=True)
class SequenceInstance:
    id: str
    events: tuple
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise IntegrityError(f"instance {self.id!r}: label must be pos|neg, got {self.label!r}")
        if not self.events:
            raise IntegrityError(f"instance {self.id!r}: empty event list")

    @property
    def length(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class Dataset:
    schema: tuple
    instances: tuple
    t_max: int

    def __post_init__(self):
        arity = len(self.schema)
        max_len = 0
        labels_seen = set()
        for inst in self.instances:
            if inst.length > self.t_max:
                raise BoundsError(
                    f"instance {inst.id!r} has {inst.length} events, exceeds T={self.t_max}"
                )
            max_len = max(max_len, inst.length)
            labels_seen.add(inst.label)
            for ev in inst.events:
                if len(ev.values) != arity:
                    raise IntegrityError(
                        f"instance {inst.id!r}: event arity {len(ev.values)} != schema arity {arity}"
                    )
        if self.instances and labels_seen != set(LABELS):
            logger.warning(
                "dataset contains only %s instances; class-difference views will be empty",
                "/".join(sorted(labels_seen)),
            )

    @property
    def attribute_names(self) -> list:
        return [a.name for a in self.schema]

    def class_counts(self) -> dict:
        counts = {LABEL_POS: 0, LABEL_NEG: 0}
        for inst in self.instances:
            counts[inst.label] += 1
        return counts


def _to_number(value):
    """Return float(value) or None when the token is not numeric."""
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, str):
        try:
            num = float(value)
        except ValueError:
            return None
        return num if np.isfinite(num) else None
    return None


def _quantile_edges(values: Sequence[float], bins: int) -> tuple:
    """Quantile bin edges over observed values, degenerate quantiles merged."""
    arr = np.asarray(sorted(values), dtype=float)
    edges = np.quantile(arr, np.linspace(0.0, 1.0, bins + 1))
    edges = np.unique(edges)
    if len(edges) < 2:
        raise SchemaError(f"cannot bin a constant column (value {edges[0]!r})")
    return tuple(float(e) for e in edges)


def infer_schema(rows: Sequence[Mapping], numeric_bins: int = 9,
                 attribute_names: Sequence[str] = None) -> list:
    """Infer one AttributeSchema per column from raw row mappings.

    Columns containing any non-numeric token become categorical (mixed
    numeric/text columns too, with a warning).  Fully numeric columns
    with at most `numeric_bins` distinct values become ordinal; the rest
    become numerical with quantile bin edges.
    """
    if not rows:
        raise SchemaError("cannot infer a schema from zero rows")
    if numeric_bins < 1:
        raise SchemaError(f"numeric_bins must be positive, got {numeric_bins}")
    if attribute_names is None:
        attribute_names = [k for k in rows[0].keys() if k not in RESERVED_COLUMNS]
    schema = []
    for name in attribute_names:
        raw = [row.get(name) for row in rows]
        if any(v is None or v == "" for v in raw):
            raise SchemaError(f"column {name!r} has missing values")
        numbers = [_to_number(v) for v in raw]
        n_numeric = sum(1 for n in numbers if n is not None)
        if n_numeric == 0 or n_numeric < len(raw):
            if 0 < n_numeric < len(raw):
                logger.warning("column %r mixes numeric and non-numeric tokens; treating as categorical", name)
            levels = tuple(sorted({str(v) for v in raw}))
            schema.append(AttributeSchema(name=name, kind=CATEGORICAL, levels=levels))
            continue
        distinct = sorted(set(numbers))
        if len(distinct) <= numeric_bins:
            schema.append(AttributeSchema(name=name, kind=ORDINAL, levels=tuple(distinct)))
        else:
            edges = _quantile_edges(numbers, numeric_bins)
            schema.append(AttributeSchema(name=name, kind=NUMERICAL, bin_edges=edges))
    return schema


def bin_level(attr: AttributeSchema, raw) -> int:
    """Map a raw value to its level index (the heatmap row/column).

    Numerical values fall into the half-open bin containing them;
    out-of-range values clamp to the first/last bin.  Categorical and
    ordinal values must match a schema level exactly.
    """
    if attr.kind == NUMERICAL:
        num = _to_number(raw)
        if num is None:
            raise UnknownLevelError(f"attribute {attr.name!r}: non-numeric value {raw!r}")
        idx = int(np.searchsorted(attr.bin_edges, num, side="right")) - 1
        return min(max(idx, 0), attr.level_count - 1)
    key = raw if attr.kind == CATEGORICAL else _to_number(raw)
    if attr.kind == CATEGORICAL and not isinstance(key, str):
        key = str(key)
    idx = attr._index.get(key)
    if idx is None:
        raise UnknownLevelError(
            f"attribute {attr.name!r}: value {raw!r} matches no schema level"
        )
    return idx


def encoded_dim(schema: Sequence[AttributeSchema]) -> int:
    """Model input dimension D: one-hot widths plus one slot per numerical attribute."""
    return sum(1 if a.kind == NUMERICAL else a.level_count for a in schema)


def encode_event(event: Event, schema: Sequence[AttributeSchema]) -> np.ndarray:
    """Encode one event: one-hot blocks for discrete attributes, scaled scalars for numerical."""
    out = np.zeros(encoded_dim(schema), dtype=np.float64)
    offset = 0
    for attr, raw in zip(schema, event.values):
        if attr.kind == NUMERICAL:
            lo, hi = attr.value_range()
            num = _to_number(raw)
            if num is None:
                raise UnknownLevelError(f"attribute {attr.name!r}: non-numeric value {raw!r}")
            out[offset] = 0.0 if hi <= lo else min(max((num - lo) / (hi - lo), 0.0), 1.0)
            offset += 1
        else:
            out[offset + bin_level(attr, raw)] = 1.0
            offset += attr.level_count
    return out


def _parse_common(row: Mapping, where: str) -> tuple:
    """Extract (id, t, label) from a raw row, raising ParseError with location."""
    for col in RESERVED_COLUMNS:
        if row.get(col) in (None, ""):
            raise ParseError(f"{where}: missing required column {col!r}")
    try:
        t = int(row["t"])
    except (TypeError, ValueError):
        raise ParseError(f"{where}: timestep {row['t']!r} is not an integer") from None
    if t < 1:
        raise ParseError(f"{where}: timestep must be >= 1, got {t}")
    label = str(row["label"])
    if label not in LABELS:
        raise ParseError(f"{where}: label must be pos|neg, got {label!r}")
    return str(row["id"]), t, label


def _read_csv_rows(path: Path) -> tuple:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise ParseError(f"{path}: empty file")
        for col in RESERVED_COLUMNS:
            if col not in header:
                raise ParseError(f"{path}: header lacks required column {col!r}")
        attr_names = [c for c in header if c not in RESERVED_COLUMNS]
        if not attr_names:
            raise ParseError(f"{path}: no attribute columns")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if row.get(None) is not None:
                raise ParseError(f"{path} row {lineno}: more fields than header columns")
            for name in attr_names:
                if row.get(name) in (None, ""):
                    raise ParseError(f"{path} row {lineno}: missing value for column {name!r}")
            rows.append((f"{path} row {lineno}", row))
    return attr_names, rows


def _read_jsonl_rows(path: Path) -> tuple:
    rows = []
    attr_names = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path} line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise ParseError(f"{path} line {lineno}: expected an object")
            if attr_names is None:
                attr_names = [k for k in obj.keys() if k not in RESERVED_COLUMNS]
                if not attr_names:
                    raise ParseError(f"{path} line {lineno}: no attribute columns")
            for name in attr_names:
                if obj.get(name) in (None, ""):
                    raise ParseError(f"{path} line {lineno}: missing value for column {name!r}")
            rows.append((f"{path} line {lineno}", obj))
    if not rows:
        raise ParseError(f"{path}: empty file")
    return attr_names, rows


def _apply_overrides(schema: list, overrides: Mapping, rows: list) -> list:
    """Replace inferred entries with sidecar-declared kinds/levels/bins."""
    by_name = {a.name: i for i, a in enumerate(schema)}
    for name, spec in overrides.items():
        if name not in by_name:
            raise SchemaError(f"schema override names unknown attribute {name!r}")
        kind = spec.get("kind")
        if kind in (CATEGORICAL, ORDINAL):
            levels = spec.get("levels")
            if not levels:
                raise SchemaError(f"override for {name!r}: {kind} requires levels")
            if kind == ORDINAL:
                levels = [_to_number(lv) for lv in levels]
                if any(lv is None for lv in levels):
                    raise SchemaError(f"override for {name!r}: ordinal levels must be numeric")
            new = AttributeSchema(name=name, kind=kind, levels=tuple(levels))
        elif kind == NUMERICAL:
            bins = spec.get("bins")
            if not isinstance(bins, int) or bins < 1:
                raise SchemaError(f"override for {name!r}: numerical requires positive integer bins")
            numbers = []
            for where, row in rows:
                num = _to_number(row.get(name))
                if num is None:
                    raise SchemaError(f"{where}: column {name!r} is not numeric but override says numerical")
                numbers.append(num)
            new = AttributeSchema(name=name, kind=NUMERICAL, bin_edges=_quantile_edges(numbers, bins))
        else:
            raise SchemaError(f"override for {name!r}: unknown kind {kind!r}")
        schema[by_name[name]] = new
    return schema


def load_dataset(path, format: str = None, numeric_bins: int = 9,
                 schema_overrides: Mapping = None, max_timesteps: int = None) -> Dataset:
    """Load a long-format CSV or JSONL file into a validated Dataset.

    Instances are grouped by `id` (sorted ascending for deterministic
    order) with events ordered by `t`; each instance must cover
    timesteps 1..L exactly once and carry a single consistent label.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: no such file")
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson", ".json") else "csv"
    if format == "csv":
        attr_names, rows = _read_csv_rows(path)
    elif format == "jsonl":
        attr_names, rows = _read_jsonl_rows(path)
    else:
        raise ParseError(f"unknown format {format!r} (expected csv or jsonl)")

    schema = infer_schema([row for _, row in rows], numeric_bins=numeric_bins,
                          attribute_names=attr_names)
    if schema_overrides:
        schema = _apply_overrides(schema, schema_overrides, rows)

    grouped: dict = {}
    labels: dict = {}
    for where, row in rows:
        inst_id, t, label = _parse_common(row, where)
        if inst_id in labels and labels[inst_id] != label:
            raise IntegrityError(
                f"{where}: instance {inst_id!r} has conflicting labels "
                f"{labels[inst_id]!r} and {label!r}"
            )
        labels[inst_id] = label
        grouped.setdefault(inst_id, []).append((t, row, where))

    instances = []
    for inst_id in sorted(grouped):
        events_raw = sorted(grouped[inst_id], key=lambda item: item[0])
        ts = [t for t, _, _ in events_raw]
        if len(set(ts)) != len(ts):
            raise IntegrityError(f"instance {inst_id!r}: duplicate timestep in {ts}")
        if ts != list(range(1, len(ts) + 1)):
            raise IntegrityError(
                f"instance {inst_id!r}: timesteps must cover 1..L exactly, got {ts}"
            )
        if max_timesteps is not None and len(ts) > max_timesteps:
            raise BoundsError(
                f"instance {inst_id!r}: length {len(ts)} exceeds declared T={max_timesteps}"
            )
        events = []
        for _, row, where in events_raw:
            values = []
            for attr in schema:
                raw = row[attr.name]
                if attr.kind == CATEGORICAL:
                    value = raw if isinstance(raw, str) else str(raw)
                else:
                    value = _to_number(raw)
                    if value is None:
                        raise ParseError(f"{where}: column {attr.name!r} value {raw!r} is not numeric")
                bin_level(attr, value)  # unseen levels reject the instance here
                values.append(value)
            events.append(Event(values=tuple(values)))
        instances.append(SequenceInstance(id=inst_id, events=tuple(events), label=labels[inst_id]))

    t_max = max_timesteps if max_timesteps is not None else max(i.length for i in instances)
    return Dataset(schema=tuple(schema), instances=tuple(instances), t_max=t_max)


def save_dataset(dataset: Dataset, path, format: str = None) -> None:
    """Write a Dataset back to long-format CSV or JSONL."""
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson", ".json") else "csv"
    names = dataset.attribute_names
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(RESERVED_COLUMNS) + names)
            for inst in dataset.instances:
                for t, ev in enumerate(inst.events, start=1):
                    writer.writerow([inst.id, t, inst.label] + [str(v) for v in ev.values])
    elif format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for inst in dataset.instances:
                for t, ev in enumerate(inst.events, start=1):
                    obj = {"id": inst.id, "t": t, "label": inst.label}
                    obj.update({n: v for n, v in zip(names, ev.values)})
                    fh.write(json.dumps(obj, sort_keys=True) + "\n")
    else:
        raise ParseError(f"unknown format {format!r} (expected csv or jsonl)")


@dataclass(frozen=True)
class EncodedDataset:
    """Dense model-side view: padded inputs, lengths, integer labels."""

    x: np.ndarray         # (N, T, D) float64, zero-padded past each length
    lengths: np.ndarray   # (N,) int
    labels: np.ndarray    # (N,) int, 0 = pos, 1 = neg
    ids: tuple

    @property
    def input_dim(self) -> int:
        return self.x.shape[2]


def encode_dataset(dataset: Dataset) -> EncodedDataset:
    n = len(dataset.instances)
    d = encoded_dim(dataset.schema)
    x = np.zeros((n, dataset.t_max, d), dtype=np.float64)
    lengths = np.zeros(n, dtype=np.int64)
    labels = np.zeros(n, dtype=np.int64)
    for i, inst in enumerate(dataset.instances):
        lengths[i] = inst.length
        labels[i] = 0 if inst.label == LABEL_POS else 1
        for t, ev in enumerate(inst.events):
            x[i, t] = encode_event(ev, dataset.schema)
    return EncodedDataset(x=x, lengths=lengths, labels=labels,
                          ids=tuple(inst.id for inst in dataset.instances))


def level_table(dataset: Dataset) -> np.ndarray:
    """(N, T, A) level indices per instance/timestep/attribute, -1 past length."""
    n = len(dataset.instances)
    a = len(dataset.schema)
    table = np.full((n, dataset.t_max, a), -1, dtype=np.int64)
    for i, inst in enumerate(dataset.instances):
        for t, ev in enumerate(inst.events):
            for j, attr in enumerate(dataset.schema):
                table[i, t, j] = bin_level(attr, ev.values[j])
    return table
