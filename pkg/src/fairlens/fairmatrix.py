"""Metrics-matrix assembly, fold pooling, column variances, fairness ratios.

The matrix M_p for protected feature p stacks one 13-entry metric row per
(model, group) pair: models outer in canonical kind order, groups inner in
their canonical order (descending size, then label). Flags ride along cell
by cell. Column variances are population variances, which makes the
complement-pair equality Var(c) = Var(1-c) an exact identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import METRIC_NAMES, MODEL_KINDS
from .metrics import (
    ConfusionCounts,
    MetricVector,
    auc_or_default,
    compute_metric_vector,
    empty_metric_vector,
)

COMPLEMENT_PAIRS = (("TPR", "FNR"), ("TNR", "FPR"), ("PPV", "FDR"), ("NPV", "FOR"))


def kind_sort_key(kind: str) -> tuple[int, int, str]:
    """Canonical kinds in fixed order; other names (external audited
    models) sort after them, lexicographically."""
    if kind in MODEL_KINDS:
        return (0, MODEL_KINDS.index(kind), "")
    return (1, 0, kind)


@dataclass(frozen=True)
class RowKey:
    group: str
    model: str
    protected_feature: str

    def __str__(self) -> str:
        return f"{self.model}:{self.group}"


@dataclass(frozen=True)
class Provenance:
    dataset: str
    feature: str
    seed: int
    aggregation: str = "micro"


@dataclass
class MetricsMatrix:
    rows: tuple[RowKey, ...]
    metric_names: tuple[str, ...]
    values: np.ndarray            # I x J
    flags: np.ndarray             # I x J bool
    column_variances: np.ndarray  # J
    provenance: Provenance

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def models(self) -> tuple[str, ...]:
        seen: list[str] = []
        for r in self.rows:
            if r.model not in seen:
                seen.append(r.model)
        return tuple(seen)

    def groups(self) -> tuple[str, ...]:
        seen: list[str] = []
        for r in self.rows:
            if r.group not in seen:
                seen.append(r.group)
        return tuple(seen)

    def row_index(self, model: str, group: str) -> int:
        for i, r in enumerate(self.rows):
            if r.model == model and r.group == group:
                return i
        raise KeyError(f"no row for model {model!r}, group {group!r}")


def _column_variances(values: np.ndarray) -> np.ndarray:
    return np.var(values, axis=0, ddof=0)


def assemble_matrix(
    vectors: dict[str, dict[str, MetricVector]],
    feature: str,
    group_order: tuple[str, ...] | list[str],
    provenance: Provenance,
) -> MetricsMatrix:
    """Stack per-(model, group) metric vectors into M_p.

    vectors maps model kind -> group label -> MetricVector; every model must
    cover every group in group_order.
    """
    if not vectors:
        raise ValueError("no model vectors to assemble")
    models = sorted(vectors, key=kind_sort_key)
    rows: list[RowKey] = []
    data: list[np.ndarray] = []
    flag_rows: list[np.ndarray] = []
    for model in models:
        by_group = vectors[model]
        for group in group_order:
            if group not in by_group:
                raise ValueError(f"missing metric vector for ({model!r}, {group!r})")
            v = by_group[group]
            rows.append(RowKey(group=group, model=model, protected_feature=feature))
            data.append(v.values)
            flag_rows.append(v.flags)
    values = np.vstack(data)
    return MetricsMatrix(
        rows=tuple(rows),
        metric_names=METRIC_NAMES,
        values=values,
        flags=np.vstack(flag_rows),
        column_variances=_column_variances(values),
        provenance=provenance,
    )


def per_model_matrix(m: MetricsMatrix, model: str) -> MetricsMatrix:
    """Restrict M_p to one model's G rows, preserving group order."""
    idx = [i for i, r in enumerate(m.rows) if r.model == model]
    if not idx:
        raise ValueError(f"model {model!r} not present in matrix")
    values = m.values[idx]
    return MetricsMatrix(
        rows=tuple(m.rows[i] for i in idx),
        metric_names=m.metric_names,
        values=values,
        flags=m.flags[idx],
        column_variances=_column_variances(values),
        provenance=m.provenance,
    )


def fairness_ratio(m: MetricsMatrix, metric: str, group_g: str, group_h: str,
                   model: str | None = None) -> float | None:
    """m_g(j) / m_h(j) for one model's rows; 1.0 signals parity.

    Returns None when the denominator metric is zero (undefined ratio).
    """
    if metric not in m.metric_names:
        raise ValueError(f"unknown metric {metric!r}")
    if model is None:
        model = m.rows[0].model
    j = m.metric_names.index(metric)
    num = m.values[m.row_index(model, group_g), j]
    den = m.values[m.row_index(model, group_h), j]
    if den == 0.0:
        return None
    return float(num / den)


def aggregate_over_folds(
    fold_counts: list[ConfusionCounts | None],
    fold_scores: list[np.ndarray],
    fold_labels: list[np.ndarray],
    n_total: int,
) -> MetricVector:
    """Pool one group's per-fold results: sum counts, rank pooled scores.

    Rate metrics are micro-averaged (counts summed across test folds before
    dividing); AUC is computed once on the concatenated test scores. Folds
    where the group was absent contribute nothing.
    """
    if not fold_counts:
        raise ValueError("need at least one fold")
    total: ConfusionCounts | None = None
    for c in fold_counts:
        if c is None:
            continue
        total = c if total is None else total + c
    if total is None or total.total == 0:
        return empty_metric_vector()
    nonempty = [s for s in fold_scores if len(s) > 0]
    scores = np.concatenate(nonempty) if nonempty else np.array([])
    labels = np.concatenate([l for l in fold_labels if len(l) > 0]) if nonempty else np.array([])
    auc, auc_flag = auc_or_default(scores, labels)
    return compute_metric_vector(total, auc, n_total, auc_flag)


def check_complement_variances(m: MetricsMatrix, tol: float = 1e-12) -> list[str]:
    """Names of complement pairs whose column variances differ beyond tol."""
    bad = []
    for a, b in COMPLEMENT_PAIRS:
        va = m.column_variances[m.metric_names.index(a)]
        vb = m.column_variances[m.metric_names.index(b)]
        if abs(va - vb) > tol:
            bad.append(f"{a}/{b}")
    return bad


def matrix_csv_text(m: MetricsMatrix) -> str:
    """CSV export: one line per row key "model:group", 17-sig-digit values."""
    lines = ["row," + ",".join(m.metric_names)]
    for key, row in zip(m.rows, m.values):
        cells = ",".join("%.17g" % v for v in row)
        lines.append(f"{key},{cells}")
    return "\n".join(lines) + "\n"
