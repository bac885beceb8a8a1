"""Exception hierarchy shared across the pipeline.

Domain errors map to CLI exit code 1; argparse owns usage errors (exit 2).
"""

from __future__ import annotations


class PopscopeError(Exception):
    """Base class for every domain error raised by this package."""


class ConfigError(PopscopeError):
    pass


class TransportError(PopscopeError):
    """A network request failed after all retries."""

    def __init__(self, message: str, attempts: int = 1, status: int | None = None):
        super().__init__(f"{message} (attempts={attempts})")
        self.attempts = attempts
        self.status = status


class FixtureMissError(PopscopeError):
    """Replay mode found no recorded response for a request digest."""

    def __init__(self, endpoint_id: str, digest: str):
        super().__init__(f"no fixture for endpoint '{endpoint_id}' digest {digest}")
        self.endpoint_id = endpoint_id
        self.digest = digest


class ProtocolError(PopscopeError):
    """The backend answered, but not in the shape the wire format promises."""


class WindowError(PopscopeError):
    """A counts backend rejected the requested date window."""


class PlanError(PopscopeError):
    """Collection planning received inconsistent inputs."""


class StorageError(PopscopeError):
    pass


class NotFoundError(PopscopeError):
    pass


class MigrationError(StorageError):
    """Snapshot or database schema version is incompatible."""


class NumericError(PopscopeError):
    """A numerical routine failed to converge or met non-finite input."""


class InsufficientDataError(PopscopeError):
    pass
