class OzoneNetworkError(Exception):
    """Base class for every error raised by the network framework."""


class InsufficientData(OzoneNetworkError):
    """Too few samples, reporters or overlapping hours for a statistic."""


class DegenerateWindow(OzoneNetworkError):
    """The sensor window has zero variance (flat-lined sensor)."""


class OutOfOrderUpdate(OzoneNetworkError):
    """A ledger update arrived at or before the last recorded hour."""


class ProxySelectionError(OzoneNetworkError):
    """No eligible proxy could be chosen for a site."""


class ConfigError(OzoneNetworkError):
    """Invalid network or scenario configuration."""


class SeriesFormatError(OzoneNetworkError):
    """Malformed series CSV input."""

    def __init__(self, message, path=None, line=None, column=None, other_line=None):
        self.path = path
        self.line = line
        self.column = column
        self.other_line = other_line
        location = []
        if path is not None:
            location.append(str(path))
        if line is not None:
            location.append(f'line {line}')
        if other_line is not None:
            location.append(f'and line {other_line}')
        if column is not None:
            location.append(f'column {column!r}')
        prefix = ', '.join(location)
        super().__init__(f'{prefix}: {message}' if prefix else message)
