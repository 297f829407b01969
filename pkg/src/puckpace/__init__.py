"""Pace-of-play analytics for ice-hockey event data."""

__version__ = "0.1.0"

from .errors import AnalysisError, ConfigError, IngestError, PuckpaceError, RinkBoundaryError
from .events import EventLog, parse_events, serialize_events, validate
from .metrics import SpeedVector, aggregate, relative_to
from .polygrid import Polygrid, SpeedGrid, build_grid, diff, smooth, traverse
from .rink import AHL, NHL, SHL, NormalizedPoint, RinkSpec, Zone, normalize, zone_of
from .sequencing import PossessionSequence, build_sequences, pace_samples, sequence_table, split_by_zone
from .synth import GenConfig, TeamConfig, TruthLedger, generate

__all__ = [
    "AHL", "NHL", "SHL", "AnalysisError", "ConfigError", "EventLog", "GenConfig", "IngestError",
    "NormalizedPoint", "Polygrid", "PossessionSequence", "PuckpaceError", "RinkBoundaryError", "RinkSpec",
    "SpeedGrid", "SpeedVector", "TeamConfig", "TruthLedger", "Zone", "aggregate", "build_grid",
    "build_sequences", "diff", "generate", "normalize", "pace_samples", "parse_events", "relative_to",
    "sequence_table", "serialize_events", "smooth", "split_by_zone", "traverse", "validate", "zone_of",
]
