"""Result tables: per-node and per-edge values keyed by (measure, distance)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import EdgeKey


def fmt_num(value: float) -> str:
    """Render a threshold or Hill order without a trailing .0."""
    f = float(value)
    if f == int(f):
        return str(int(f))
    return repr(f)


def column_name(measure: str, distance: float) -> str:
    """Property name for a (measure, distance) pair.

    Measures already carry their family prefix (``cc_harmonic``, ``ac_pub``,
    ``mu_hill_q2``, ``st_total_mean``). Weighted accessibility columns keep
    their ``_wt`` suffix after the distance: ``ac_pub_400_wt``.
    """
    d = fmt_num(distance)
    if measure.endswith("_wt") and measure.startswith("ac_"):
        return f"{measure[:-3]}_{d}_wt"
    return f"{measure}_{d}"


@dataclass
class MetricsTable:
    """Per-node (and per-edge, for segmentised betweenness) result arrays.

    ``node_values[(measure, distance)]`` is a float array aligned with
    ``node_ids``; likewise for edges.
    """

    node_ids: list[str]
    node_values: dict[tuple[str, float], np.ndarray] = field(default_factory=dict)
    edge_refs: list[EdgeKey] = field(default_factory=list)
    edge_values: dict[tuple[str, float], np.ndarray] = field(default_factory=dict)

    def add_node(self, measure: str, distance: float, values: np.ndarray) -> None:
        if len(values) != len(self.node_ids):
            raise ValueError(f"column {measure}@{distance} has {len(values)} rows, "
                             f"table has {len(self.node_ids)} nodes")
        self.node_values[(measure, float(distance))] = np.asarray(values, dtype=np.float64)

    def add_edge(self, measure: str, distance: float, values: np.ndarray) -> None:
        if len(values) != len(self.edge_refs):
            raise ValueError(f"edge column {measure}@{distance} has {len(values)} rows, "
                             f"table has {len(self.edge_refs)} edges")
        self.edge_values[(measure, float(distance))] = np.asarray(values, dtype=np.float64)

    def node_columns(self) -> list[tuple[str, np.ndarray]]:
        return [(column_name(m, d), v) for (m, d), v in self.node_values.items()]

    def edge_columns(self) -> list[tuple[str, np.ndarray]]:
        return [(column_name(m, d), v) for (m, d), v in self.edge_values.items()]

    def merge(self, other: "MetricsTable") -> "MetricsTable":
        """Combine columns of two tables over the same node universe."""
        if other.node_ids != self.node_ids:
            raise ValueError("cannot merge metrics tables over different node sets")
        if other.edge_refs and self.edge_refs and other.edge_refs != self.edge_refs:
            raise ValueError("cannot merge metrics tables over different edge sets")
        out = MetricsTable(
            node_ids=self.node_ids,
            node_values={**self.node_values, **other.node_values},
            edge_refs=self.edge_refs or other.edge_refs,
            edge_values={**self.edge_values, **other.edge_values},
        )
        return out
