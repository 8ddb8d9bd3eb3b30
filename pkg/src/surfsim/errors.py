"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid scenario configuration or out-of-range argument."""


class DegenerateChainError(ValueError):
    """A channel chain with p_on = p_off = 0 has no stationary occupancy."""


class InsufficientHistoryError(ValueError):
    """An observation was requested over an empty history window."""


class UncoverableNeighborError(ValueError):
    """A neighbor exposes no available channel, so no channel set covers it."""


class UndefinedRatioError(ValueError):
    """Delivery ratio is undefined when no messages were originated."""


class AggregationError(ValueError):
    """Reports with mismatched run parameters cannot be aggregated."""
