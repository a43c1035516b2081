import logging

import pandas as pd

from src.backend.analysis.crossings import asymptotic_speedup, crossing_between
from src.backend.analysis.reference_values import (
    IMPERFECTION_LABELS,
    IMPERFECTIONS,
    PUBLISHED_CROSSINGS,
    printed_decimals,
    published_bounds,
)
from src.backend.analysis.tables import reproduce_tables
from src.backend.analytic.curves import scenario_curve
from src.backend.model.scenario import BenchmarkConvention, ScenarioParams

logger = logging.getLogger("ImperfectionAnalyzer")

BANNERS = {
    BenchmarkConvention.LAMBDA_MAX: "Benchmark: open-loop λ_max = ½[1 + erf(√(γt))] (published table convention)",
    BenchmarkConvention.BLOCH_LENGTH: (
        "Benchmark: open-loop Bloch length erf(√(γt)); rows differ from the published tables, "
        "which use the λ_max convention"
    ),
}

# label -> (scenario, parameters, reference, bracket); a reference given as a
# (scenario, parameters) pair means a crossing between two feedback curves
CROSSINGS = {
    "constant alpha=1 vs open loop": ("constant", {"alpha": 1.0}, BenchmarkConvention.BLOCH_LENGTH, (0.05, 2.0)),
    "calibrated delta=0.25 vs open loop": (
        "calibrated", {"delta": 0.25}, BenchmarkConvention.BLOCH_LENGTH, (0.5, 5.0)),
    "constant alpha=0.9 vs open loop (lower)": (
        "constant", {"alpha": 0.9}, BenchmarkConvention.BLOCH_LENGTH, (0.3, 2.5)),
    "constant alpha=0.9 vs open loop (upper)": (
        "constant", {"alpha": 0.9}, BenchmarkConvention.BLOCH_LENGTH, (2.5, 6.0)),
    "calibrated delta=0.05 vs constant alpha=1": ("calibrated", {"delta": 0.05}, ("constant", {"alpha": 1.0}), (1.0, 5.0)),
}

DEFAULT_EPSILONS = (1e-4, 1e-6, 1e-8, 1e-10, 1e-12)


class ImperfectionAnalyzer:
    def __init__(self, benchmark=BenchmarkConvention.LAMBDA_MAX, gamma=1.0):
        """
        Reproduces the threshold tables, crossing times and speed-up figures.

        Args:
            benchmark (BenchmarkConvention or str): Convention of the table benchmark.
            gamma (float): Measurement rate.
        """
        self.benchmark = BenchmarkConvention(benchmark)
        self.gamma = gamma
        self._rows = {}

    def table_rows(self, which):
        if which not in self._rows:
            self._rows[which] = reproduce_tables(self.benchmark, self.gamma, which=(which,))
        return self._rows[which]

    def table_frame(self, which):
        """
        Machine-readable table.

        Returns:
            pandas.DataFrame: Columns imperfection, reference, lo, hi, table, range.
        """
        rows = self.table_rows(which)
        return pd.DataFrame(
            {
                "imperfection": [row.kind for row in rows],
                "reference": [row.reference.value for row in rows],
                "lo": [row.lo for row in rows],
                "hi": [row.hi for row in rows],
                "table": [row.table for row in rows],
                "range": [row.range_label for row in rows],
            }
        )

    def format_table(self, which):
        """Table laid out as imperfection | range A | range B, digits as published."""
        rows = {(row.range_label, row.kind): row for row in self.table_rows(which)}
        heading = "fixed time" if which == 1 else "fixed Bloch vector length"
        lines = [BANNERS[self.benchmark], f"Table {which} ({heading})"]
        header = f"{'Imperfection':<32}{'Range A':<22}{'Range B':<22}"
        lines += [header, "-" * len(header)]
        for kind in IMPERFECTIONS:
            cells = [self._format_cell(which, label, rows[(label, kind)]) for label in ("A", "B")]
            lines.append(f"{IMPERFECTION_LABELS[kind]:<32}{cells[0]:<22}{cells[1]:<22}")
        return "\n".join(lines)

    def _format_cell(self, which, range_label, row):
        if row.empty:
            return "none"
        lo_text, hi_text = published_bounds(which, range_label, row.kind)
        if row.kind == "alpha":
            lo_digits, hi_digits = printed_decimals(lo_text), printed_decimals(hi_text)
            return f"[{row.lo:.{lo_digits}f}, {row.hi:.{hi_digits}f}]"
        if lo_text is not None:
            return f"≥ {row.lo:.{printed_decimals(lo_text)}f}"
        return f"≤ {row.hi:.{printed_decimals(hi_text)}f}"

    def crossing_report(self):
        """
        Crossing times next to the published figures.

        Returns:
            pandas.DataFrame: Columns crossing, computed, published, note.
        """
        records = []
        for label, (scenario, values, reference, bracket) in CROSSINGS.items():
            params = ScenarioParams(gamma=self.gamma, **values)
            if isinstance(reference, tuple):
                ref_name, ref_values = reference
                reference = scenario_curve(ref_name, ScenarioParams(gamma=self.gamma, **ref_values))
            computed = crossing_between(scenario, params, reference, bracket)
            published, note = PUBLISHED_CROSSINGS[label]
            records.append({"crossing": label, "computed": computed, "published": float(published), "note": note})
        return pd.DataFrame(records)

    def speedup_report(self, epsilons=DEFAULT_EPSILONS):
        ratios = asymptotic_speedup(epsilons)
        return pd.DataFrame({"epsilon": list(epsilons), "ratio": ratios})
