"""Python access to the mtlab library: extension fields, X-ray sups, the counterexample and scenarios."""

from ._mtlab import (
    ArgumentError,
    UsageError,
    extend,
    fit_loglog,
    list_scenarios,
    run_cex,
    run_scenario,
    xray_sup,
)

__all__ = [
    "ArgumentError",
    "UsageError",
    "extend",
    "fit_loglog",
    "list_scenarios",
    "run_cex",
    "run_scenario",
    "xray_sup",
]
