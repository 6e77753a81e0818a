"""Monte Carlo sum-rate simulator for small-cell in-band wireless
backhaul under a massive-MIMO base station."""

__version__ = "0.1.0"

from .channel import (  # noqa: F401
    ConfigurationError,
    Drop,
    PathLossModel,
    SystemConfig,
    generate_drop,
    generate_geometry,
)
from .link_rates import LinkRates, WaterfillResult, waterfilling  # noqa: F401
from .montecarlo import ResultTable, SweepCell, SweepSpec, run_point, run_sweep  # noqa: F401
from .strategies import (  # noqa: F401
    STRATEGY_NAMES,
    StrategyResult,
    TimePlan,
    evaluate_strategy,
)
