from .counters import (
    CounterSeries,
    InsufficientSamplesError,
    RunWindow,
    counter_delta,
    counter_delta_with_resets,
    gauge_delta,
    group_samples,
)
from .exposition import ExpositionError, MetricSample, parse_exposition, render_exposition
from .files import load_pv_sizes, load_scrape_dir, load_scrape_samples
from .promapi import MetricsClient, MetricsEndpointError, RangeQueryError, parse_range_query_response
from .usage import (
    DEFAULT_MAPPING,
    SYSTEM_CONTAINER,
    Diagnostics,
    MappingError,
    MappingRule,
    MetricMapping,
    UsageBuild,
    build_usage,
)
