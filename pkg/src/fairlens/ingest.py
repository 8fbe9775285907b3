"""Dataset loading, encoding, and protected-group extraction.

A dataset is described by a declarative JSON spec (see configs/*.json and the
README for the grammar). Loading parses the CSV against the declared columns;
encoding produces a numeric design matrix:

  numeric      -> z-scored (population std)
  binary       -> {0, 1} (lexicographically smaller observed value -> 0)
  categorical  -> one-hot indicator block, category columns in sorted order
  ordinal      -> declared level rank, then z-scored
  label        -> {0, 1} with the declared positive value -> 1

Rows with any missing feature or label cell are dropped before encoding and
group extraction, and the dropped count is reported on the results.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

COLUMN_KINDS = ("numeric", "binary", "categorical", "ordinal")
COLUMN_ROLES = ("feature", "label", "ignore")
POSITIVE_MEANINGS = ("assistive", "punitive")


class IngestError(ValueError):
    """Raised for spec violations, malformed files, or degenerate columns."""


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    role: str = "feature"
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise IngestError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in COLUMN_ROLES:
            raise IngestError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.kind == "ordinal":
            if len(self.levels) < 2:
                raise IngestError(f"ordinal column {self.name!r} needs >= 2 levels")
            if len(set(self.levels)) != len(self.levels):
                raise IngestError(f"ordinal column {self.name!r} has duplicate levels")


@dataclass(frozen=True)
class DatasetSpec:
    """Declarative description of one decision dataset."""

    name: str
    source_path: str
    columns: tuple[ColumnSpec, ...]
    label_column: str
    positive_value: str
    positive_meaning: str
    protected_features: tuple[str, ...]
    reference_groups: dict = field(default_factory=dict)  # feature -> explicit label

    def __post_init__(self):
        by_name = {c.name: c for c in self.columns}
        if len(by_name) != len(self.columns):
            raise IngestError(f"dataset {self.name!r}: duplicate column names")
        if self.positive_meaning not in POSITIVE_MEANINGS:
            raise IngestError(
                f"dataset {self.name!r}: positive_meaning must be one of {POSITIVE_MEANINGS}"
            )
        label = by_name.get(self.label_column)
        if label is None:
            raise IngestError(f"label column {self.label_column!r} not declared")
        if label.role != "label":
            raise IngestError(f"column {self.label_column!r} must have role 'label'")
        if not self.protected_features:
            raise IngestError(f"dataset {self.name!r}: no protected features declared")
        for p in self.protected_features:
            col = by_name.get(p)
            if col is None:
                raise IngestError(f"protected feature {p!r} not declared as a column")
            if col.kind not in ("categorical", "binary"):
                raise IngestError(f"protected feature {p!r} must be categorical or binary")
        for p in self.reference_groups:
            if p not in self.protected_features:
                raise IngestError(f"explicit reference group for unknown feature {p!r}")

    def column(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise IngestError(f"no column named {name!r}")


def load_dataset_spec(path: str | Path) -> DatasetSpec:
    """Read a dataset spec JSON file; source_path resolves relative to it."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        columns = tuple(
            ColumnSpec(
                name=c["name"],
                kind=c["kind"],
                role=c.get("role", "feature"),
                levels=tuple(c.get("levels", ())),
            )
            for c in raw["columns"]
        )
        ref = raw.get("reference_groups", {})
        spec = DatasetSpec(
            name=raw["name"],
            source_path=str((path.parent / raw["source_path"]).resolve()),
            columns=columns,
            label_column=raw["label_column"],
            positive_value=str(raw["positive_value"]),
            positive_meaning=raw["positive_meaning"],
            protected_features=tuple(raw["protected_features"]),
            reference_groups=dict(ref),
        )
    except KeyError as exc:
        raise IngestError(f"dataset spec {path}: missing field {exc}") from exc
    return spec


@dataclass
class RawTable:
    """Parsed CSV contents: string cells per declared column."""

    columns: dict[str, list[str]]
    n_rows: int
    missing: dict[str, list[int]]  # column -> row indices with empty cells

    def row_has_missing(self, used: list[str]) -> np.ndarray:
        flags = np.zeros(self.n_rows, dtype=bool)
        for name in used:
            for i in self.missing.get(name, ()):
                flags[i] = True
        return flags


def load_dataset(spec: DatasetSpec) -> RawTable:
    """Parse the spec's CSV (RFC 4180, UTF-8, header row required)."""
    path = Path(spec.source_path)
    if not path.exists():
        raise IngestError(f"dataset file not found: {path}")
    declared = [c.name for c in spec.columns]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file, header row required") from None
        for name in declared:
            if name not in header:
                raise IngestError(f"{path}: declared column {name!r} absent from header")
        idx = {name: header.index(name) for name in declared}
        columns: dict[str, list[str]] = {name: [] for name in declared}
        missing: dict[str, list[int]] = {name: [] for name in declared}
        n = 0
        for row in reader:
            for name in declared:
                cell = row[idx[name]].strip() if idx[name] < len(row) else ""
                if cell == "":
                    missing[name].append(n)
                columns[name].append(cell)
            n += 1
    table = RawTable(columns=columns, n_rows=n, missing=missing)
    _check_numeric_cells(table, spec, path)
    return table


def _check_numeric_cells(table: RawTable, spec: DatasetSpec, path: Path) -> None:
    for col in spec.columns:
        if col.kind != "numeric" or col.role == "ignore":
            continue
        gaps = set(table.missing.get(col.name, ()))
        for i, cell in enumerate(table.columns[col.name]):
            if i in gaps:
                continue
            try:
                float(cell)
            except ValueError:
                raise IngestError(
                    f"{path}: non-parsable numeric cell at row {i + 2}, "
                    f"column {col.name!r}: {cell!r}"
                ) from None


def complete_rows(table: RawTable, spec: DatasetSpec) -> tuple[np.ndarray, int]:
    """Indices of rows with no missing feature/label cell, and the dropped count.

    Encoding and group extraction both use this filter, so their rows always
    line up.
    """
    used = [c.name for c in spec.columns if c.role in ("feature", "label")]
    bad = table.row_has_missing(used)
    kept = np.flatnonzero(~bad)
    return kept, int(bad.sum())


@dataclass
class EncodedDataset:
    """Numeric design matrix plus everything needed to re-normalize per fold."""

    design: np.ndarray            # N x F, z-scored on the full dataset
    raw_design: np.ndarray        # N x F, before z-scoring scaled columns
    labels: np.ndarray            # N, int8 in {0,1}
    column_names: list[str]
    scaled_columns: np.ndarray    # indices of columns that get z-scored
    normalization_params: dict[str, tuple[float, float]]  # column -> (mean, std)
    kept_rows: np.ndarray         # original row indices retained
    dropped_rows: int
    notes: list[str]


def _zscore(design: np.ndarray, scaled: np.ndarray, fit_rows: np.ndarray,
            names: list[str], notes: list[str] | None = None):
    out = design.copy()
    params: dict[str, tuple[float, float]] = {}
    for j in scaled:
        col = design[fit_rows, j]
        mean = float(col.mean())
        std = float(col.std())  # population std
        if std == 0.0:
            out[:, j] = 0.0
            params[names[j]] = (mean, 0.0)
            if notes is not None:
                notes.append(f"column {names[j]!r} has zero variance; encoded as 0")
            continue
        out[:, j] = (design[:, j] - mean) / std
        params[names[j]] = (mean, std)
    return out, params


def encode_features(table: RawTable, spec: DatasetSpec) -> EncodedDataset:
    """Encode the table to a design matrix and {0,1} label vector.

    z-scores here are fit on the full (complete-row) dataset; use
    fold_normalized() to refit them on a fold's training rows.
    """
    kept, dropped = complete_rows(table, spec)
    if kept.size == 0 and table.n_rows > 0:
        raise IngestError("every row has missing cells; nothing to encode")
    notes: list[str] = []
    blocks: list[np.ndarray] = []
    names: list[str] = []
    scaled: list[int] = []

    for col in spec.columns:
        if col.role != "feature":
            continue
        cells = [table.columns[col.name][i] for i in kept]
        if col.kind == "numeric":
            vals = np.array([float(c) for c in cells], dtype=np.float64)
            scaled.append(len(names))
            names.append(col.name)
            blocks.append(vals[:, None])
        elif col.kind == "ordinal":
            rank = {lev: r for r, lev in enumerate(col.levels)}
            try:
                vals = np.array([rank[c] for c in cells], dtype=np.float64)
            except KeyError as exc:
                raise IngestError(
                    f"ordinal column {col.name!r}: value {exc} not in declared levels"
                ) from None
            scaled.append(len(names))
            names.append(col.name)
            blocks.append(vals[:, None])
        elif col.kind == "binary":
            observed = sorted(set(cells))
            if len(observed) != 2:
                raise IngestError(
                    f"binary column {col.name!r} has {len(observed)} observed values "
                    f"(need exactly 2): {observed[:5]}"
                )
            vals = np.array([observed.index(c) for c in cells], dtype=np.float64)
            names.append(col.name)
            blocks.append(vals[:, None])
        elif col.kind == "categorical":
            observed = sorted(set(cells))
            if len(observed) < 2:
                raise IngestError(
                    f"categorical column {col.name!r} has a single observed value"
                )
            pos = {v: k for k, v in enumerate(observed)}
            hot = np.zeros((len(cells), len(observed)), dtype=np.float64)
            hot[np.arange(len(cells)), [pos[c] for c in cells]] = 1.0
            names.extend(f"{col.name}={v}" for v in observed)
            blocks.append(hot)

    raw_design = np.hstack(blocks) if blocks else np.zeros((kept.size, 0))
    scaled_idx = np.array(scaled, dtype=np.int64)

    label_col = spec.column(spec.label_column)
    label_cells = [table.columns[label_col.name][i] for i in kept]
    observed_labels = sorted(set(label_cells))
    if kept.size and spec.positive_value not in observed_labels:
        raise IngestError(
            f"declared positive value {spec.positive_value!r} never observed in "
            f"label column {spec.label_column!r} (saw {observed_labels[:5]})"
        )
    labels = np.array([1 if c == spec.positive_value else 0 for c in label_cells],
                      dtype=np.int8)

    fit_rows = np.arange(kept.size)
    design, params = _zscore(raw_design, scaled_idx, fit_rows, names, notes)
    return EncodedDataset(
        design=design,
        raw_design=raw_design,
        labels=labels,
        column_names=names,
        scaled_columns=scaled_idx,
        normalization_params=params,
        kept_rows=kept,
        dropped_rows=dropped,
        notes=notes,
    )


def fold_normalized(enc: EncodedDataset, train_rows: np.ndarray) -> np.ndarray:
    """Design matrix re-z-scored with means/stds fit on train_rows only."""
    design, _ = _zscore(enc.raw_design, enc.scaled_columns,
                        np.asarray(train_rows), enc.column_names)
    return design


@dataclass
class GroupIndex:
    """Group assignment for one protected feature over the complete rows."""

    feature: str
    labels: tuple[str, ...]      # canonical order: descending size, then name
    assignments: np.ndarray      # int index into labels, per row
    sizes: tuple[int, ...]
    reference: str

    @property
    def n_groups(self) -> int:
        return len(self.labels)


def extract_groups(table: RawTable, spec: DatasetSpec) -> dict[str, GroupIndex]:
    """Group assignments per protected feature, reference group resolved.

    Default policy picks the largest group, ties broken by the
    lexicographically smallest label; an explicit reference in the spec
    overrides it.
    """
    kept, _ = complete_rows(table, spec)
    out: dict[str, GroupIndex] = {}
    for feature in spec.protected_features:
        cells = [table.columns[feature][i] for i in kept]
        counts: dict[str, int] = {}
        for c in cells:
            counts[c] = counts.get(c, 0) + 1
        if len(counts) < 2:
            raise IngestError(
                f"protected feature {feature!r} has a single group; "
                "fairness comparison is degenerate"
            )
        order = sorted(counts, key=lambda g: (-counts[g], g))
        index = {g: k for k, g in enumerate(order)}
        assignments = np.array([index[c] for c in cells], dtype=np.int64)
        explicit = spec.reference_groups.get(feature)
        if explicit is not None:
            if explicit not in counts:
                raise IngestError(
                    f"explicit reference group {explicit!r} not observed in {feature!r}"
                )
            reference = explicit
        else:
            reference = order[0]
        out[feature] = GroupIndex(
            feature=feature,
            labels=tuple(order),
            assignments=assignments,
            sizes=tuple(counts[g] for g in order),
            reference=reference,
        )
    return out
