"""Tariff, emissions and demand-response analysis."""

from ._gridalign import (
    Bill,
    BillingError,
    ParseError,
    RegionSet,
    Tariff,
    ValidationError,
    assign_region,
    average_aef,
    categorize,
    compute_bill,
    duration_bounds,
    equivalent_hours,
    estimate_mef,
    flatten,
    month_hour,
    pearson,
    parse_tariff,
    run_stage,
)

__all__ = [
    "Bill",
    "BillingError",
    "ParseError",
    "RegionSet",
    "Tariff",
    "ValidationError",
    "assign_region",
    "average_aef",
    "categorize",
    "compute_bill",
    "duration_bounds",
    "equivalent_hours",
    "estimate_mef",
    "flatten",
    "month_hour",
    "pearson",
    "parse_tariff",
    "run_stage",
]
