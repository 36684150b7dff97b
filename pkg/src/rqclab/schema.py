"""Frozen output tables.

Column order is part of the output contract; bump ``SCHEMA_VERSION`` when
any table changes.  ``docs/schema.md`` mirrors this file.
"""
from __future__ import annotations

SCHEMA_VERSION = "1"

PROVENANCE = ("exact", "monte-carlo", "formula")

TABLES: dict[str, tuple[str, ...]] = {
    "moments": ("n", "d", "t", "measure", "estimate", "stderr", "trials", "rhs_eq8", "rhs_eq9",
                "vacuous", "consistent", "provenance", "seed"),
    "ideal_walk": ("n", "m", "t", "exact", "exact_fraction", "estimate", "stderr", "trials",
                   "within_3sigma", "provenance", "seed"),
    "spectrum": ("n", "t", "eigenvalue", "eigenvalue_fraction", "multiplicity", "rank",
                 "is_second", "achieved_by_parity", "provenance", "seed"),
    "parseval": ("n", "t", "classes", "pairs", "violations", "min_ratio", "provenance", "seed"),
    "low_support": ("n", "t", "A", "mode", "fraction", "counting_bound", "vacuous", "trials",
                    "provenance", "seed"),
    "support_distribution": ("n", "t", "support", "count", "provenance", "seed"),
    "conjecture": ("n", "t", "c", "threshold", "tail", "ci_low", "ci_high", "trials",
                   "support_min", "support_median", "support_max", "provenance", "seed"),
    "f2mix": ("n", "k", "tv", "bound", "bound_vacuous", "holds", "provenance", "seed"),
    "f2gap": ("n", "order", "diameter", "second_eigenvalue", "gap", "lemma_rate", "comparison_rate",
              "provenance", "seed"),
    "lemma1": ("n", "k0", "tv_at_k0", "bound_at_k0", "lambda_star", "log2_envelope_at_k0", "holds",
               "provenance", "seed"),
    "zstring": ("n", "k", "mode", "tv_nonzero", "nonzero_vs_all", "trials", "provenance", "seed"),
    "bounds": ("formula", "inputs", "value", "vacuous", "extras", "provenance", "seed"),
    "verify": ("id", "name", "passed", "measured", "required"),
}


def columns(table: str) -> tuple[str, ...]:
    try:
        return TABLES[table]
    except KeyError:
        raise KeyError(f"unknown table {table!r}") from None
