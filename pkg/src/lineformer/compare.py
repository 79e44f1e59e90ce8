"""Paired comparison of two classifiers over the same snippet set.

The default test builds the 2x2 contingency of per-snippet correctness
(A correct/incorrect x B correct/incorrect) and applies Pearson's
chi-square with one degree of freedom, no continuity correction. McNemar's
test over the discordant cells is available as an alternative. True
positive and false negative sets are additionally decomposed into
unique/shared counts for venn-style reporting.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .train import EvalReport


@dataclass
class ComparisonReport:
    method: str
    chi2_statistic: float
    p_value: float
    contingency: list[list[int]]
    tp_unique_a: int
    tp_unique_b: int
    tp_shared: int
    fn_unique_a: int
    fn_unique_b: int
    fn_shared: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def chi2_sf(statistic: float) -> float:
    """Survival function of the chi-square distribution with df=1."""
    if statistic < 0:
        raise ValueError(f"chi-square statistic must be >= 0, got {statistic}")
    return math.erfc(math.sqrt(statistic / 2.0))


def pearson_chi2(table: list[list[int]]) -> float:
    """Pearson chi-square statistic for a 2x2 table, no continuity correction.

    Degenerate tables (a zero row or column margin) carry no association
    information and return 0.
    """
    (a, b), (c, d) = table
    if min(a, b, c, d) < 0:
        raise ValueError("contingency counts must be non-negative")
    total = a + b + c + d
    rows = (a + b, c + d)
    cols = (a + c, b + d)
    if total == 0 or 0 in rows or 0 in cols:
        return 0.0
    stat = 0.0
    observed = ((a, b), (c, d))
    for i in range(2):
        for j in range(2):
            expected = rows[i] * cols[j] / total
            stat += (observed[i][j] - expected) ** 2 / expected
    return stat


def mcnemar_chi2(discordant_ab: int, discordant_ba: int) -> float:
    """McNemar's chi-square over the discordant pair counts, uncorrected."""
    n = discordant_ab + discordant_ba
    if n == 0:
        return 0.0
    return (discordant_ab - discordant_ba) ** 2 / n


def compare_models(report_a: EvalReport, report_b: EvalReport, method: str = "chi2") -> ComparisonReport:
    """Statistical and set-wise comparison of two evaluation reports.

    Both reports must cover the identical snippet id set.
    """
    if method not in ("chi2", "mcnemar"):
        raise ValueError(f"method must be 'chi2' or 'mcnemar', got {method!r}")
    by_id_a = {r["id"]: r for r in report_a.records}
    by_id_b = {r["id"]: r for r in report_b.records}
    if by_id_a.keys() != by_id_b.keys():
        only_a = sorted(by_id_a.keys() - by_id_b.keys())[:5]
        only_b = sorted(by_id_b.keys() - by_id_a.keys())[:5]
        raise ValueError(f"snippet id sets differ (only in A: {only_a}, only in B: {only_b})")

    both = a_only = b_only = neither = 0
    for snippet_id, rec_a in by_id_a.items():
        rec_b = by_id_b[snippet_id]
        ok_a = rec_a["prediction"] == rec_a["label"]
        ok_b = rec_b["prediction"] == rec_b["label"]
        if ok_a and ok_b:
            both += 1
        elif ok_a:
            a_only += 1
        elif ok_b:
            b_only += 1
        else:
            neither += 1
    contingency = [[both, a_only], [b_only, neither]]

    if method == "chi2":
        statistic = pearson_chi2(contingency)
    else:
        statistic = mcnemar_chi2(a_only, b_only)

    tp_a = {r["id"] for r in report_a.records if r["label"] == 1 and r["prediction"] == 1}
    tp_b = {r["id"] for r in report_b.records if r["label"] == 1 and r["prediction"] == 1}
    fn_a = {r["id"] for r in report_a.records if r["label"] == 1 and r["prediction"] == 0}
    fn_b = {r["id"] for r in report_b.records if r["label"] == 1 and r["prediction"] == 0}

    return ComparisonReport(
        method=method,
        chi2_statistic=statistic,
        p_value=chi2_sf(statistic),
        contingency=contingency,
        tp_unique_a=len(tp_a - tp_b),
        tp_unique_b=len(tp_b - tp_a),
        tp_shared=len(tp_a & tp_b),
        fn_unique_a=len(fn_a - fn_b),
        fn_unique_b=len(fn_b - fn_a),
        fn_shared=len(fn_a & fn_b),
    )
