"""Aggregation of attention weights into pairwise heatmaps and temporal graphs.

Everything here is a pure function of (dataset, attention records, slice).
A slice picks events by attention band, time range, and attribute
subset; selected events then accumulate into:

  * heat matrices: per value-level pair, the summed normalized
    attention of matching events, per class and per timestep;
  * variance matrices: the population variance of each cell's
    per-timestep heat series;
  * T-partite graphs: nodes per (timestep, value level) with class
    frequencies, edges linking each instance's consecutive selected
    events (timestep skips allowed).

Accumulation order is fixed (instance order, then timestep) so results
are bit-reproducible.  Matrix cell arrays are indexed [row][col] =
[level of the grid-row attribute][level of the grid-column attribute].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .data import Dataset, LABEL_NEG, LABEL_POS, bin_level, encode_dataset
from .model import AttentionRecord, ModelCheckpoint, extract_attentions

MODE_POSITIVE = "positive"
MODE_NEGATIVE = "negative"
MODE_BOTH = "both"
MODE_DIFFERENCE = "difference"
MODES = (MODE_POSITIVE, MODE_NEGATIVE, MODE_BOTH, MODE_DIFFERENCE)

BASIS_NORMALIZED = "normalized"   # filter bands on alpha-hat
BASIS_RAW = "raw"                 # filter bands on raw softmax alpha
BASES = (BASIS_NORMALIZED, BASIS_RAW)

KIND_HEAT = "heat"
KIND_VARIANCE = "variance"
KIND_DIAGONAL = "diagonal"

STAT_SUM = "sum"
STAT_MEAN = "mean"


class SliceError(ValueError):
    """A slice fails validation against its own invariants or the dataset."""


@dataclass(frozen=True)
class SliceSpec:
    """Event filter: attention band, closed time range, attribute subset.

    Both interval ends are inclusive.  `attributes` is an ordered,
    duplicate-free tuple of schema indices; None means every attribute.
    `time_range` is 1-based; None means the full [1, T].
    """

    attention_range: tuple = (0.0, 1.0)
    time_range: tuple = None
    attributes: tuple = None
    mode: str = MODE_BOTH
    epoch: int = None

    def __post_init__(self):
        lo, hi = self.attention_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise SliceError(
                f"attention range must satisfy 0 <= lo <= hi <= 1, got [{lo}, {hi}]"
            )
        object.__setattr__(self, "attention_range", (float(lo), float(hi)))
        if self.time_range is not None:
            t0, t1 = self.time_range
            if t0 < 1 or t0 > t1:
                raise SliceError(f"time range must satisfy 1 <= t0 <= t1, got [{t0}, {t1}]")
            object.__setattr__(self, "time_range", (int(t0), int(t1)))
        if self.attributes is not None:
            attrs = tuple(int(a) for a in self.attributes)
            if not attrs:
                raise SliceError("attribute subset must not be empty")
            if len(set(attrs)) != len(attrs):
                raise SliceError(f"duplicate attribute indices in {attrs}")
            object.__setattr__(self, "attributes", attrs)
        if self.mode not in MODES:
            raise SliceError(f"mode must be one of {MODES}, got {self.mode!r}")

    def resolve(self, dataset: Dataset) -> "SliceSpec":
        """Fill defaults from the dataset and bounds-check against it."""
        t0, t1 = self.time_range if self.time_range is not None else (1, dataset.t_max)
        if t1 > dataset.t_max:
            raise SliceError(f"time range end {t1} exceeds T={dataset.t_max}")
        attrs = self.attributes
        if attrs is None:
            attrs = tuple(range(len(dataset.schema)))
        for a in attrs:
            if not 0 <= a < len(dataset.schema):
                raise SliceError(f"attribute index {a} out of range for {len(dataset.schema)} attributes")
        return replace(self, time_range=(t0, t1), attributes=attrs)


@dataclass(frozen=True)
class SelectedEvent:
    t: int            # 1-based timestep
    event: Event
    weight: float     # normalized attention, the heat contribution
    levels: tuple     # bin_level per schema attribute


@dataclass(frozen=True)
class Selection:
    """Events surviving a slice, grouped per instance in dataset order."""

    slice: SliceSpec          # resolved
    per_instance: tuple       # tuple per instance of (SelectedEvent, ...) ordered by t
    labels: tuple             # instance labels, "pos" | "neg"
    ids: tuple

    @property
    def time_range(self) -> tuple:
        return self.slice.time_range

    def count(self) -> int:
        return sum(len(evs) for evs in self.per_instance)


def select_events(dataset: Dataset, attentions: Sequence[AttentionRecord],
                  slice_spec: SliceSpec, basis: str = BASIS_NORMALIZED) -> Selection:
    """Pick each instance's events with t in the time range and attention in the band.

    The band filter reads normalized attention by default; basis="raw"
    filters on the raw softmax weights instead (used by the epoch
    comparison, where absolute attention mass is the quantity of
    interest).  Selected events always carry normalized attention as
    their heat weight.
    """
    if basis not in BASES:
        raise SliceError(f"basis must be one of {BASES}, got {basis!r}")
    if len(attentions) != len(dataset.instances):
        raise ValueError(
            f"{len(attentions)} attention records for {len(dataset.instances)} instances"
        )
    resolved = slice_spec.resolve(dataset)
    lo, hi = resolved.attention_range
    t0, t1 = resolved.time_range
    schema = dataset.schema
    per_instance = []
    for inst, rec in zip(dataset.instances, attentions):
        if rec.instance_id != inst.id:
            raise ValueError(
                f"attention record {rec.instance_id!r} does not match instance {inst.id!r}"
            )
        picked = []
        for t in range(t0, min(t1, inst.length) + 1):
            value = rec.normalized[t - 1] if basis == BASIS_NORMALIZED else rec.alpha[t - 1]
            if lo <= value <= hi:
                ev = inst.events[t - 1]
                picked.append(SelectedEvent(
                    t=t, event=ev, weight=rec.normalized[t - 1],
                    levels=tuple(bin_level(a, v) for a, v in zip(schema, ev.values)),
                ))
        per_instance.append(tuple(picked))
    return Selection(slice=resolved, per_instance=tuple(per_instance),
                     labels=tuple(i.label for i in dataset.instances),
                     ids=tuple(i.id for i in dataset.instances))


def _require_attr(selection: Selection, attr: int) -> None:
    if attr not in selection.slice.attributes:
        raise SliceError(f"attribute {attr} is not part of the slice {selection.slice.attributes}")


def heat_series(dataset: Dataset, selection: Selection, p: int, q: int,
                class_label: str) -> np.ndarray:
    """Per-cell, per-timestep attention mass for attribute pair (p, q).

    Returns shape (level_count(p), level_count(q), t1 - t0 + 1); entry
    [i, j, k] sums the weights of class `class_label` events at
    timestep t0 + k whose p-level is i and q-level is j.
    """
    _require_attr(selection, p)
    _require_attr(selection, q)
    if class_label not in (LABEL_POS, LABEL_NEG):
        raise ValueError(f"class must be pos|neg, got {class_label!r}")
    t0, t1 = selection.time_range
    out = np.zeros((dataset.schema[p].level_count, dataset.schema[q].level_count,
                    t1 - t0 + 1))
    for events, label in zip(selection.per_instance, selection.labels):
        if label != class_label:
            continue
        for ev in events:
            out[ev.levels[p], ev.levels[q], ev.t - t0] += ev.weight
    return out


def heat_matrix(pos_series: np.ndarray, neg_series: np.ndarray, mode: str):
    """Collapse per-class series over time into the mode's display matrix.

    positive -> +pos sums; negative -> -neg sums; difference -> pos - neg;
    both -> the (pos, neg) pair untouched, split rendering being a
    display concern.
    """
    pos_sum = pos_series.sum(axis=2)
    neg_sum = neg_series.sum(axis=2)
    if mode == MODE_POSITIVE:
        return pos_sum
    if mode == MODE_NEGATIVE:
        return -neg_sum
    if mode == MODE_DIFFERENCE:
        return pos_sum - neg_sum
    if mode == MODE_BOTH:
        return pos_sum, neg_sum
    raise SliceError(f"mode must be one of {MODES}, got {mode!r}")


def temporal_variance(series: np.ndarray) -> np.ndarray:
    """Population variance of each cell's heat over the slice's timesteps."""
    return series.var(axis=2)


def log_scale(value: float, max_abs: float) -> float:
    """Signed log intensity in [-1, 1]: sign(v) * ln(1+|v|) / ln(1+max_abs)."""
    if max_abs < abs(value):
        raise ValueError(f"max_abs {max_abs} smaller than |value| {abs(value)}")
    if max_abs == 0.0:
        return 0.0
    return math.copysign(math.log1p(abs(value)) / math.log1p(max_abs), value)


def _log_scale_array(values: np.ndarray, max_abs: float) -> np.ndarray:
    if max_abs == 0.0:
        return np.zeros_like(values)
    return np.sign(values) * np.log1p(np.abs(values)) / math.log1p(max_abs)


@dataclass(frozen=True)
class GridEntry:
    """One matrix of the grid at column p, row q (indices into the slice attributes).

    Arrays are [row][col] = [q-level][p-level].  Heat and diagonal
    entries carry per-class totals plus per-timestep series; variance
    entries carry per-class variances and no series.
    """

    p: int
    q: int
    kind: str
    pos: np.ndarray
    neg: np.ndarray
    series_pos: np.ndarray = None   # [rows, cols, |T_range|]
    series_neg: np.ndarray = None

    @property
    def rows(self) -> int:
        return self.pos.shape[0]

    @property
    def cols(self) -> int:
        return self.pos.shape[1]

    def signed(self, mode: str) -> np.ndarray:
        if mode == MODE_POSITIVE:
            return self.pos
        if mode == MODE_NEGATIVE:
            return -self.neg
        if mode == MODE_DIFFERENCE:
            return self.pos - self.neg
        raise SliceError(f"no single signed matrix in mode {mode!r}")


@dataclass(frozen=True)
class MatrixGrid:
    """All-pairs matrix grid: heat below the diagonal, variance above."""

    slice: SliceSpec
    attributes: tuple          # schema indices, slice order
    attribute_info: tuple      # (name, kind, level labels) per sliced attribute
    entries: tuple             # GridEntry, row-major by (q, p)
    basis: str
    statistic: str

    def entry(self, p: int, q: int) -> GridEntry:
        n = len(self.attributes)
        if not (0 <= p < n and 0 <= q < n):
            raise KeyError(f"grid position ({p}, {q}) outside {n}x{n}")
        return self.entries[q * n + p]

    def export(self) -> dict:
        """JSON-shaped dict, schema version 1."""
        mode = self.slice.mode
        heat_entries = [e for e in self.entries if e.kind != KIND_VARIANCE]
        var_entries = [e for e in self.entries if e.kind == KIND_VARIANCE]

        def group_max(group):
            m = 0.0
            for e in group:
                m = max(m, float(e.pos.max(initial=0.0)), float(e.neg.max(initial=0.0)))
            return m

        max_heat = group_max(heat_entries)
        max_var = group_max(var_entries)
        t0, t1 = self.slice.time_range
        lo, hi = self.slice.attention_range
        matrices = []
        for e in self.entries:
            max_abs = max_var if e.kind == KIND_VARIANCE else max_heat
            entry = {
                "p": e.p,
                "q": e.q,
                "kind": e.kind,
                "rows": e.rows,
                "cols": e.cols,
                "pos": e.pos.tolist(),
                "neg": e.neg.tolist(),
                "display": None if mode == MODE_BOTH
                           else _log_scale_array(e.signed(mode), max_abs).tolist(),
                "display_pos": _log_scale_array(e.pos, max_abs).tolist(),
                "display_neg": _log_scale_array(e.neg, max_abs).tolist(),
                "series": None if e.kind == KIND_VARIANCE else {
                    "pos": e.series_pos.tolist(),
                    "neg": e.series_neg.tolist(),
                },
            }
            matrices.append(entry)
        return {
            "v": 1,
            "slice": {
                "att_lo": lo, "att_hi": hi, "t0": t0, "t1": t1,
                "mode": mode, "epoch": self.slice.epoch, "basis": self.basis,
            },
            "attributes": [
                {"index": idx, "name": name, "kind": kind, "levels": list(levels)}
                for idx, (name, kind, levels) in zip(self.attributes, self.attribute_info)
            ],
            "display_max": {"heat": max_heat, "variance": max_var},
            "matrices": matrices,
        }


def build_grid(dataset: Dataset, attentions: Sequence[AttentionRecord],
               slice_spec: SliceSpec, basis: str = BASIS_NORMALIZED,
               statistic: str = STAT_SUM) -> MatrixGrid:
    """Assemble the n x n grid for the slice's attribute list.

    Grid position (column p, row q): p < q holds the heat matrix of
    pair (p, q); p > q holds the temporal variance of pair (q, p);
    p = q holds the single-attribute diagonal matrix.  Value levels run
    ascending along both cell axes.  statistic="mean" divides each cell
    by its contributing event count instead of summing.
    """
    if statistic not in (STAT_SUM, STAT_MEAN):
        raise SliceError(f"statistic must be sum|mean, got {statistic!r}")
    selection = select_events(dataset, attentions, slice_spec, basis=basis)
    resolved = selection.slice
    attrs = resolved.attributes
    t0, t1 = resolved.time_range
    t_len = t1 - t0 + 1
    counts_of = {a: dataset.schema[a].level_count for a in attrs}

    # one pass over selected events fills every pair's series
    sums = {}
    counts = {}
    for ai, a in enumerate(attrs):
        for bi, b in enumerate(attrs):
            if ai <= bi:
                sums[(a, b)] = {
                    LABEL_POS: np.zeros((counts_of[a], counts_of[b], t_len)),
                    LABEL_NEG: np.zeros((counts_of[a], counts_of[b], t_len)),
                }
                counts[(a, b)] = {
                    LABEL_POS: np.zeros((counts_of[a], counts_of[b], t_len)),
                    LABEL_NEG: np.zeros((counts_of[a], counts_of[b], t_len)),
                }
    for events, label in zip(selection.per_instance, selection.labels):
        for ev in events:
            k = ev.t - t0
            for ai, a in enumerate(attrs):
                la = ev.levels[a]
                for bi in range(ai, len(attrs)):
                    b = attrs[bi]
                    sums[(a, b)][label][la, ev.levels[b], k] += ev.weight
                    counts[(a, b)][label][la, ev.levels[b], k] += 1.0

    def series_for(a, b, label):
        if (a, b) in sums:
            return sums[(a, b)][label], counts[(a, b)][label]
        # stored transposed
        return (sums[(b, a)][label].transpose(1, 0, 2),
                counts[(b, a)][label].transpose(1, 0, 2))

    def per_step(s, c):
        # the temporal view under mean shows the mean weight at each step
        if statistic == STAT_MEAN:
            return np.where(c > 0, s / np.where(c > 0, c, 1.0), 0.0)
        return s

    def cells(s, c):
        # under mean a cell is the mean weight over ALL its events, not a
        # sum of per-step means
        if statistic == STAT_MEAN:
            ct = c.sum(axis=2)
            return np.where(ct > 0, s.sum(axis=2) / np.where(ct > 0, ct, 1.0), 0.0)
        return s.sum(axis=2)

    entries = []
    for qi in range(len(attrs)):
        for pi in range(len(attrs)):
            a_p, a_q = attrs[pi], attrs[qi]
            if pi == qi:
                kind = KIND_DIAGONAL
                sp, cp = series_for(a_p, a_p, LABEL_POS)
                sn, cn = series_for(a_p, a_p, LABEL_NEG)
            elif pi < qi:
                kind = KIND_HEAT
                # [row][col] = [q-level][p-level]
                sp, cp = series_for(a_q, a_p, LABEL_POS)
                sn, cn = series_for(a_q, a_p, LABEL_NEG)
            else:
                kind = KIND_VARIANCE
                sp, cp = series_for(a_q, a_p, LABEL_POS)
                sn, cn = series_for(a_q, a_p, LABEL_NEG)
            if kind == KIND_VARIANCE:
                entries.append(GridEntry(p=pi, q=qi, kind=kind,
                                         pos=temporal_variance(per_step(sp, cp)),
                                         neg=temporal_variance(per_step(sn, cn))))
            else:
                entries.append(GridEntry(p=pi, q=qi, kind=kind,
                                         pos=cells(sp, cp), neg=cells(sn, cn),
                                         series_pos=per_step(sp, cp),
                                         series_neg=per_step(sn, cn)))
    info = tuple(
        (dataset.schema[a].name, dataset.schema[a].kind,
         tuple(dataset.schema[a].level_labels()))
        for a in attrs
    )
    return MatrixGrid(slice=resolved, attributes=attrs, attribute_info=info,
                      entries=tuple(entries), basis=basis, statistic=statistic)


@dataclass(frozen=True)
class TPartiteNode:
    t: int
    position: int     # index into the vertical layout
    levels: tuple     # (level,) or (primary level, secondary level)
    freq_pos: int
    freq_neg: int


@dataclass(frozen=True)
class TPartiteEdge:
    src: tuple        # (t, position)
    dst: tuple
    freq_pos: int
    freq_neg: int
    curved: bool
    curvature: int    # timestep distance when curved, else 0


@dataclass(frozen=True)
class TPartiteGraph:
    """Nodes partitioned by timestep; edges join consecutive selected events.

    Edges are pre-sorted ascending by frequency so a renderer drawing
    in order paints the busiest connections last (on top).
    """

    variant: str              # "single" | "combined"
    attr: int                 # schema index
    attr2: int                # secondary schema index or None
    class_label: str          # "pos" | "neg" | None for combined
    axes: tuple               # timesteps t0..t1
    n_positions: int
    nodes: tuple
    edges: tuple
    max_node_freq: int
    max_edge_freq: int

    def export(self) -> dict:
        """JSON-shaped dict, schema version 1."""
        nodes = []
        for n in self.nodes:
            item = {"t": n.t, "pos": n.position,
                    "freq_pos": n.freq_pos, "freq_neg": n.freq_neg}
            if self.variant == "single":
                item["level"] = n.levels[0]
            else:
                item["levels"] = list(n.levels)
            nodes.append(item)
        edges = [
            {"from": list(e.src), "to": list(e.dst),
             "freq_pos": e.freq_pos, "freq_neg": e.freq_neg,
             "curved": e.curved, "curvature": e.curvature}
            for e in self.edges
        ]
        return {
            "v": 1,
            "variant": self.variant,
            "attr": self.attr,
            "attr2": self.attr2,
            "class": self.class_label,
            "axes": list(self.axes),
            "n_positions": self.n_positions,
            "nodes": nodes,
            "edges": edges,
            "max_node_freq": self.max_node_freq,
            "max_edge_freq": self.max_edge_freq,
        }


def _accumulate_graph(selection: Selection, position_of, class_filter):
    """Count node and edge frequencies per class over consecutive selected events."""
    node_freq = {}
    edge_freq = {}
    for events, label in zip(selection.per_instance, selection.labels):
        if class_filter is not None and label != class_filter:
            continue
        slot = 0 if label == LABEL_POS else 1
        prev = None
        for ev in events:
            key = (ev.t, position_of(ev))
            node_freq.setdefault(key, [0, 0])[slot] += 1
            if prev is not None:
                edge_freq.setdefault((prev, key), [0, 0])[slot] += 1
            prev = key
    return node_freq, edge_freq


def _finish_graph(variant, attr, attr2, class_label, selection, n_positions,
                  node_freq, edge_freq, levels_of) -> TPartiteGraph:
    t0, t1 = selection.time_range
    nodes = tuple(
        TPartiteNode(t=t, position=pos, levels=levels_of(pos),
                     freq_pos=f[0], freq_neg=f[1])
        for (t, pos), f in sorted(node_freq.items())
    )
    edges = tuple(
        TPartiteEdge(src=src, dst=dst, freq_pos=f[0], freq_neg=f[1],
                     curved=src[1] == dst[1],
                     curvature=dst[0] - src[0] if src[1] == dst[1] else 0)
        for (src, dst), f in sorted(
            edge_freq.items(),
            key=lambda item: (item[1][0] + item[1][1], item[0]),
        )
    )
    return TPartiteGraph(
        variant=variant, attr=attr, attr2=attr2, class_label=class_label,
        axes=tuple(range(t0, t1 + 1)), n_positions=n_positions,
        nodes=nodes, edges=edges,
        max_node_freq=max((n.freq_pos + n.freq_neg for n in nodes), default=0),
        max_edge_freq=max((e.freq_pos + e.freq_neg for e in edges), default=0),
    )


def tpartite_single(dataset: Dataset, selection: Selection, attr: int,
                    class_label: str) -> TPartiteGraph:
    """One class's temporal pattern graph over a single attribute's levels."""
    _require_attr(selection, attr)
    if class_label not in (LABEL_POS, LABEL_NEG):
        raise ValueError(f"class must be pos|neg, got {class_label!r}")
    node_freq, edge_freq = _accumulate_graph(
        selection, lambda ev: ev.levels[attr], class_label)
    return _finish_graph("single", attr, None, class_label, selection,
                         dataset.schema[attr].level_count, node_freq, edge_freq,
                         lambda pos: (pos,))


def tpartite_combined(dataset: Dataset, selection: Selection, primary: int,
                      secondary: int) -> TPartiteGraph:
    """Both classes over (primary, secondary) level pairs in one structure.

    Vertical positions group by primary level, secondary levels nested
    within each group (see layout_combined).  Edges whose endpoints sit
    at the same vertical position are flagged curved, with curvature
    equal to the timestep distance they span.
    """
    _require_attr(selection, primary)
    _require_attr(selection, secondary)
    if primary == secondary:
        raise SliceError(
            "combined graph needs two distinct attributes; use tpartite_single for one"
        )
    n_q = dataset.schema[secondary].level_count
    node_freq, edge_freq = _accumulate_graph(
        selection, lambda ev: ev.levels[primary] * n_q + ev.levels[secondary], None)
    return _finish_graph("combined", primary, secondary, None, selection,
                         dataset.schema[primary].level_count * n_q,
                         node_freq, edge_freq,
                         lambda pos: (pos // n_q, pos % n_q))


def tpartite_document(dataset: Dataset, selection: Selection, attr: int,
                      attr2: int = None, class_label: str = None,
                      epoch: int = None) -> dict:
    """Bundle graph exports for one query into a versioned envelope.

    A single attribute yields one graph per class (or just the
    requested class); two attributes yield the combined graph.
    """
    if attr2 is not None:
        graphs = [tpartite_combined(dataset, selection, attr, attr2).export()]
        variant = "combined"
    else:
        classes = (class_label,) if class_label else (LABEL_POS, LABEL_NEG)
        graphs = [tpartite_single(dataset, selection, attr, c).export()
                  for c in classes]
        variant = "single"
    return {
        "v": 1,
        "variant": variant,
        "attr": dataset.schema[attr].name,
        "attr2": dataset.schema[attr2].name if attr2 is not None else None,
        "epoch": epoch,
        "slice": {"att_lo": selection.slice.attention_range[0],
                  "att_hi": selection.slice.attention_range[1],
                  "t0": selection.time_range[0],
                  "t1": selection.time_range[1]},
        "graphs": graphs,
    }


def layout_combined(n_p: int, n_q: int, height: float = 1.0) -> tuple:
    """Vertical center for each (primary, secondary) level pair, top-down.

    n_p equal-height groups in ascending primary order, n_q evenly
    spaced slots within each group.  Position index k*n_q + j maps to
    primary level k, secondary level j.
    """
    if n_p < 1 or n_q < 1:
        raise ValueError(f"level counts must be >= 1, got ({n_p}, {n_q})")
    if height <= 0:
        raise ValueError(f"height must be positive, got {height}")
    group = height / n_p
    slot = group / n_q
    return tuple(k * group + (j + 0.5) * slot for k in range(n_p) for j in range(n_q))


@dataclass(frozen=True)
class BandSummary:
    """Aggregate graph statistics for one attention band at one epoch."""

    band: tuple
    edge_count: int          # distinct edges across the band's graphs
    edge_freq_total: int
    node_freq_total: int
    graphs: tuple            # ((p, q), TPartiteGraph) in pair order


@dataclass(frozen=True)
class EpochBands:
    epoch: int
    low: BandSummary
    high: BandSummary


def _band_summary(dataset, attentions, band, attrs, basis) -> BandSummary:
    spec = SliceSpec(attention_range=band, attributes=attrs)
    selection = select_events(dataset, attentions, spec, basis=basis)
    attrs = selection.slice.attributes
    graphs = []
    if len(attrs) == 1:
        graphs.append(((attrs[0], None),
                       tpartite_single(dataset, selection, attrs[0], LABEL_POS)))
        graphs.append(((attrs[0], None),
                       tpartite_single(dataset, selection, attrs[0], LABEL_NEG)))
    else:
        for i in range(len(attrs)):
            for j in range(i + 1, len(attrs)):
                graphs.append(((attrs[i], attrs[j]),
                               tpartite_combined(dataset, selection, attrs[i], attrs[j])))
    return BandSummary(
        band=band,
        edge_count=sum(len(g.edges) for _, g in graphs),
        edge_freq_total=sum(e.freq_pos + e.freq_neg for _, g in graphs for e in g.edges),
        node_freq_total=sum(n.freq_pos + n.freq_neg for _, g in graphs for n in g.nodes),
        graphs=tuple(graphs),
    )


def epoch_comparison(checkpoints: Sequence[ModelCheckpoint], dataset: Dataset,
                     slice_low: tuple = (0.0, 0.2), slice_high: tuple = (0.6, 1.0),
                     attributes: tuple = None, basis: str = BASIS_RAW) -> list:
    """Band-filtered graph statistics per checkpoint, for the over-epochs view.

    Recomputes attentions at every checkpoint and builds each band's
    combined graphs (all attribute pairs, or per-class single graphs
    when one attribute is given).  Bands filter on raw attention by
    default: raw weights are comparable across epochs, whereas
    per-instance normalization pins every sequence's maximum to 1 even
    at random initialization.
    """
    if len(checkpoints) < 2:
        raise ValueError(f"need at least 2 checkpoints, got {len(checkpoints)}")
    encoded = encode_dataset(dataset)
    results = []
    for cp in sorted(checkpoints, key=lambda c: c.epoch):
        attentions = extract_attentions(cp.params, encoded)
        results.append(EpochBands(
            epoch=cp.epoch,
            low=_band_summary(dataset, attentions, tuple(slice_low), attributes, basis),
            high=_band_summary(dataset, attentions, tuple(slice_high), attributes, basis),
        ))
    return results


def epoch_comparison_export(results: Sequence[EpochBands]) -> dict:
    """JSON-shaped summary of the band trend, schema version 1."""
    def band_dict(s: BandSummary) -> dict:
        return {
            "band": list(s.band),
            "edge_count": s.edge_count,
            "edge_freq_total": s.edge_freq_total,
            "node_freq_total": s.node_freq_total,
        }
    return {
        "v": 1,
        "epochs": [
            {"epoch": r.epoch, "low": band_dict(r.low), "high": band_dict(r.high)}
            for r in results
        ],
    }
