class PuckpaceError(Exception):
    """Base class for analysis errors surfaced to the CLI as exit code 1."""


class ConfigError(PuckpaceError, ValueError):
    pass


class RinkBoundaryError(PuckpaceError, ValueError):
    pass


class IngestError(PuckpaceError, ValueError):
    def __init__(self, message, line=None, event_id=None, field=None):
        self.line = line
        self.event_id = event_id
        self.field = field
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if event_id is not None:
            parts.append(f"event {event_id}")
        if field is not None:
            parts.append(f"field {field}")
        prefix = ", ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class AnalysisError(PuckpaceError):
    pass
