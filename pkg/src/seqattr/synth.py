"""Synthetic sequence datasets with a planted discriminative pattern.

An instance is rule-positive iff the planted attribute takes the
planted level at one or more timesteps inside the active window.  The
planted attribute's remaining cells draw from the other levels, so on
that attribute the planted level appears nowhere except as plants and
the ground truth for attribution stays unambiguous; all other
attributes draw over their full level range.  Background draws are
uniform unless `background` supplies per-level weights.  Labels flip
with probability `noise_rate`, putting the Bayes accuracy at exactly
1 - noise_rate.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .data import (
    AttributeSchema,
    Dataset,
    Event,
    LABEL_NEG,
    LABEL_POS,
    SequenceInstance,
)


class GenerationError(RuntimeError):
    """Dataset generation could not satisfy the spec's constraints."""


def _attr_name(i: int) -> str:
    letters = string.ascii_uppercase
    name = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        name = letters[r] + name
    return name


@dataclass(frozen=True)
class PlantSpec:
    """Shape of the generated data and the rule hidden inside it."""

    n_instances: int = 1000
    t_max: int = 12
    n_attributes: int = 4
    levels_per_attribute: int = 5
    planted_attribute: int = 0
    planted_level: int = 0
    window: tuple = (4, 6)
    noise_rate: float = 0.05
    min_length: int = None          # default: ceil(t_max / 2)
    background: tuple = None        # per-level draw weights, None = uniform
    balance_range: tuple = (0.45, 0.55)
    max_resample: int = 200

    def __post_init__(self):
        if self.n_instances < 2:
            raise ValueError(f"need at least 2 instances, got {self.n_instances}")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.n_attributes < 1:
            raise ValueError(f"need at least 1 attribute, got {self.n_attributes}")
        if self.levels_per_attribute < 2:
            raise ValueError(
                f"need at least 2 levels per attribute, got {self.levels_per_attribute}"
            )
        if not 0 <= self.planted_attribute < self.n_attributes:
            raise ValueError(f"planted attribute {self.planted_attribute} out of range")
        if not 0 <= self.planted_level < self.levels_per_attribute:
            raise ValueError(f"planted level {self.planted_level} out of range")
        w0, w1 = self.window
        if not 1 <= w0 <= w1 <= self.t_max:
            raise ValueError(f"window [{w0}, {w1}] must sit inside [1, {self.t_max}]")
        object.__setattr__(self, "window", (int(w0), int(w1)))
        if not 0.0 <= self.noise_rate < 0.5:
            raise ValueError(f"noise rate must be in [0, 0.5), got {self.noise_rate}")
        min_len = self.min_length if self.min_length is not None else -(-self.t_max // 2)
        if not 1 <= min_len <= self.t_max:
            raise ValueError(f"min_length {min_len} must sit inside [1, {self.t_max}]")
        if w0 > min_len:
            raise ValueError(
                f"window start {w0} exceeds the minimum sequence length {min_len}; "
                "some positives could not host the pattern"
            )
        object.__setattr__(self, "min_length", int(min_len))
        if self.background is not None:
            weights = tuple(float(w) for w in self.background)
            if len(weights) != self.levels_per_attribute:
                raise ValueError(
                    f"background needs {self.levels_per_attribute} weights, "
                    f"got {len(weights)}"
                )
            if any(not np.isfinite(w) or w < 0 for w in weights):
                raise ValueError("background weights must be finite and non-negative")
            if sum(weights) <= 0:
                raise ValueError("background weights must not all be zero")
            # the planted attribute draws with the planted level zeroed out
            if sum(w for i, w in enumerate(weights) if i != self.planted_level) <= 0:
                raise ValueError(
                    "background leaves the planted attribute with no non-planted mass"
                )
            object.__setattr__(self, "background", weights)
        b0, b1 = self.balance_range
        if not 0.0 < b0 < b1 < 1.0:
            raise ValueError(f"balance range [{b0}, {b1}] must sit strictly inside (0, 1)")

    def schema(self) -> tuple:
        """The explicit categorical schema of generated datasets."""
        levels = tuple(f"v{i}" for i in range(self.levels_per_attribute))
        return tuple(
            AttributeSchema(name=_attr_name(i), kind="categorical", levels=levels)
            for i in range(self.n_attributes)
        )


def rule_label(spec: PlantSpec, events) -> str:
    """Recompute the noiseless rule label for a sequence of Events."""
    w0, w1 = spec.window
    planted = f"v{spec.planted_level}"
    for t, ev in enumerate(events, start=1):
        if w0 <= t <= w1 and ev.values[spec.planted_attribute] == planted:
            return LABEL_POS
    return LABEL_NEG


def _draw_instances(spec: PlantSpec, rng: np.random.Generator) -> list:
    planted_value = f"v{spec.planted_level}"
    all_levels = [f"v{i}" for i in range(spec.levels_per_attribute)]
    background = [lv for i, lv in enumerate(all_levels) if i != spec.planted_level]
    full_p = masked_p = None
    if spec.background is not None:
        w = np.asarray(spec.background, dtype=float)
        full_p = w / w.sum()
        masked = np.delete(w, spec.planted_level)
        masked_p = masked / masked.sum()
    width = max(4, len(str(spec.n_instances - 1)))
    instances = []
    for i in range(spec.n_instances):
        length = int(rng.integers(spec.min_length, spec.t_max + 1))
        positive_intent = bool(rng.random() < 0.5)
        if full_p is None:
            grid = rng.choice(all_levels, size=(length, spec.n_attributes))
        else:
            grid = rng.choice(all_levels, size=(length, spec.n_attributes), p=full_p)
        # only the planted attribute's background excludes the planted
        # level, so its occurrences there are plants and nothing else
        if masked_p is None:
            grid[:, spec.planted_attribute] = rng.choice(background, size=length)
        else:
            grid[:, spec.planted_attribute] = rng.choice(
                background, size=length, p=masked_p)
        if positive_intent:
            w0, w1 = spec.window
            t_star = int(rng.integers(w0, min(w1, length) + 1))
            grid[t_star - 1, spec.planted_attribute] = planted_value
        label = LABEL_POS if positive_intent else LABEL_NEG
        if rng.random() < spec.noise_rate:
            label = LABEL_NEG if label == LABEL_POS else LABEL_POS
        events = tuple(Event(values=tuple(str(v) for v in row)) for row in grid)
        instances.append(SequenceInstance(id=f"s{i:0{width}d}", events=events, label=label))
    return instances


def generate(spec: PlantSpec, seed: int = 0) -> Dataset:
    """Deterministic dataset for (spec, seed), class balance enforced by resampling."""
    rng = np.random.default_rng(seed)
    b0, b1 = spec.balance_range
    for _ in range(spec.max_resample):
        instances = _draw_instances(spec, rng)
        pos_frac = sum(1 for inst in instances if inst.label == LABEL_POS) / len(instances)
        if b0 <= pos_frac <= b1:
            return Dataset(schema=spec.schema(), instances=tuple(instances),
                           t_max=spec.t_max)
    raise GenerationError(
        f"class balance stayed outside [{b0}, {b1}] after {spec.max_resample} attempts"
    )


def oracle_top_cells(spec: PlantSpec) -> dict:
    """Ground-truth heat cells per attribute pair containing the planted attribute.

    Keys are canonical pairs (p, q) with p <= q; values are the cell
    index sets {(i, j)} on the (p-levels x q-levels) heat matrix that
    the planted rule should dominate: the planted level's full row (or
    column, when the planted attribute is the second of the pair), and
    the single (level, level) cell on the diagonal pair.
    """
    a, lv, k = spec.planted_attribute, spec.planted_level, spec.levels_per_attribute
    cells = {(a, a): frozenset({(lv, lv)})}
    for q in range(spec.n_attributes):
        if q == a:
            continue
        pair = (a, q) if a < q else (q, a)
        if a < q:
            cells[pair] = frozenset((lv, j) for j in range(k))
        else:
            cells[pair] = frozenset((j, lv) for j in range(k))
    return cells
