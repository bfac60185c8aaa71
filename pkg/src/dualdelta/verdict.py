"""Decision procedure turning the statistical battery into a verdict.

Flow: the KS test gates on distributional equivalence first; only when it
rejects do the one-sided paired tests assign a direction.  When the paired
differences pass a normality check, a paired t-test is attached as
corroborating evidence but never overrides the nonparametric conclusion.
Spread is compared separately via the Brown-Forsythe test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .stats import (
    DeltaDistribution,
    DescriptiveSummary,
    TestResult,
    ks_two_sample,
    mean_abs_deviation_from_median,
    paired_t_test,
    shapiro_wilk,
    sign_test,
    variance_test,
    wilcoxon_signed_rank,
)

__all__ = ["ACCURACY_OUTCOMES", "STABILITY_OUTCOMES", "Verdict", "decide_verdict",
           "compare_summaries", "MIN_TRIALS"]

ACCURACY_OUTCOMES = ("equivalent", "impl1_more_accurate", "impl2_more_accurate", "inconclusive")
STABILITY_OUTCOMES = ("equivalent", "impl1_more_stable", "impl2_more_stable", "inconclusive")

MIN_TRIALS = 20

_CAVEAT_NO_CORRECTION = ("tests applied sequentially at the configured alpha "
                         "without multiple-comparison correction")
_CAVEAT_EQUIVALENCE = ("accuracy 'equivalent' records failure to reject the KS null at "
                       "alpha; non-rejection is not a formal equivalence test")
_CAVEAT_STABILITY_EQ = ("stability 'equivalent' records failure to reject the "
                        "spread-comparison null at alpha")


@dataclass(frozen=True)
class Verdict:
    accuracy: str
    stability: str
    evidence: tuple[tuple[str, TestResult], ...]  # (role, result)
    alpha: float
    caveats: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "stability": self.stability,
            "alpha": self.alpha,
            "caveats": list(self.caveats),
            "evidence": [dict(role=role, **res.as_dict()) for role, res in self.evidence],
        }


def decide_verdict(d1: DeltaDistribution, d2: DeltaDistribution, alpha: float = 0.01) -> Verdict:
    """Compare two paired error distributions and categorize the outcome."""
    if len(d1) != len(d2):
        raise ValueError(f"paired distributions must have equal length, got {len(d1)} and {len(d2)}")
    n = len(d1)
    caveats = [_CAVEAT_NO_CORRECTION]
    evidence: list[tuple[str, TestResult]] = []

    if n < MIN_TRIALS:
        caveats.append(f"only {n} paired trials (< {MIN_TRIALS}); no verdict attempted")
        return Verdict("inconclusive", "inconclusive", (), alpha, tuple(caveats))

    ks = ks_two_sample(d1, d2)
    evidence.append(("equivalence_gate", ks))

    if ks.p_value >= alpha:
        accuracy = "equivalent"
        caveats.append(_CAVEAT_EQUIVALENCE)
    else:
        try:
            greater = wilcoxon_signed_rank(d1, d2, "greater")
            less = wilcoxon_signed_rank(d1, d2, "less")
        except ValueError:
            # all paired differences zero (or similarly degenerate): the
            # sign test's zero handling is the designated fallback
            greater = sign_test(d1, d2, "greater")
            less = sign_test(d1, d2, "less")
        evidence.append(("direction_impl1_worse", greater))
        evidence.append(("direction_impl2_worse", less))
        if greater.p_value < alpha:
            accuracy = "impl2_more_accurate"
        elif less.p_value < alpha:
            accuracy = "impl1_more_accurate"
        else:
            accuracy = "inconclusive"
            caveats.append("distributions differ (KS) but neither direction is "
                           "significant under the paired tests")

    # normality gate: attach the (more powerful) t-test when defensible
    diffs = [a - b for a, b in zip(d1.values, d2.values)]
    try:
        sw = shapiro_wilk(diffs)
        evidence.append(("normality_gate", sw))
        if sw.p_value >= alpha:
            direction = {"impl2_more_accurate": "greater",
                         "impl1_more_accurate": "less"}.get(accuracy, "two_sided")
            t = paired_t_test(d1, d2, direction)
            evidence.append(("corroboration_t", t))
    except ValueError:
        pass

    try:
        vt = variance_test(d1, d2)
        evidence.append(("stability", vt))
        if vt.p_value < alpha:
            spread1 = mean_abs_deviation_from_median(d1)
            spread2 = mean_abs_deviation_from_median(d2)
            stability = "impl2_more_stable" if spread1 > spread2 else "impl1_more_stable"
        else:
            stability = "equivalent"
            caveats.append(_CAVEAT_STABILITY_EQ)
    except ValueError:
        # no spread in either sample: identical constants are trivially
        # equally stable
        stability = "equivalent"
        caveats.append("no spread in either sample; stability equivalent by construction")

    return Verdict(accuracy, stability, tuple(evidence), alpha, tuple(caveats))


def _ratio(num: float, den: float) -> float:
    if den != 0.0:
        return num / den
    if num == 0.0:
        return 1.0
    return math.inf


def compare_summaries(s1: DescriptiveSummary, s2: DescriptiveSummary) -> dict[str, float]:
    """Headline ratios (impl_1 over impl_2); infinite on zero denominators."""
    return {
        "mean_ratio": _ratio(s1.mean, s2.mean),
        "p99_ratio": _ratio(s1.p99, s2.p99),
        "max_ratio": _ratio(s1.maximum, s2.maximum),
        "spread_ratio": _ratio(s1.std, s2.std),
    }
