"""Exception hierarchy shared across the toolkit."""


class MinerscopeError(Exception):
    """Base class for all toolkit errors."""


# -- block blob / chain ------------------------------------------------------

class MalformedBlob(MinerscopeError):
    """Byte sequence does not decode as a block-header hashing blob."""


class EmptyLeaves(MinerscopeError):
    """Tree hash requested over zero leaves."""


class ChainGap(MinerscopeError):
    """Chain snapshot has missing heights inside the observation window."""


class EmptyWindow(MinerscopeError):
    """Estimation requested over an empty or sub-day observation window."""


# -- wasm --------------------------------------------------------------------

class NotWasm(MinerscopeError):
    """Input lacks the WebAssembly magic prefix."""


class UnsupportedVersion(MinerscopeError):
    """WebAssembly version field is not supported."""


class MalformedSection(MinerscopeError):
    """Section payload is truncated or overruns its declared length."""


class OpcodeDecodeError(MinerscopeError):
    """Unknown opcode byte inside a function body."""


# -- fetching ----------------------------------------------------------------

class FetchError(MinerscopeError):
    """Base class for per-domain fetch failures (never fatal to a batch)."""


class DnsFailure(FetchError):
    pass


class TlsFailure(FetchError):
    pass


class FetchTimeout(FetchError):
    pass


class TooManyRedirects(FetchError):
    pass


class ConnectFailure(FetchError):
    pass


# -- pool protocol -----------------------------------------------------------

class PoolError(MinerscopeError):
    """Base class for pool client/server errors."""


class AuthRejected(PoolError):
    pass


class ProtocolError(PoolError):
    """Malformed or unexpected frame on the pool connection."""


class StaleJob(PoolError):
    """Share submitted for an unknown or expired job id."""


class InvalidShare(PoolError):
    """Share failed recomputation or the compact target check."""


class OffsetOutOfRange(MinerscopeError):
    """Obfuscation key offset lies beyond the blob length."""


class UnavailableHash(MinerscopeError):
    """A declared proof-of-work hash has no registered implementation."""


class Cancelled(MinerscopeError):
    """Cooperative cancellation of a long-running solve."""


# -- ingestion ---------------------------------------------------------------

class SchemaError(MinerscopeError):
    """A capture or snapshot line violates the expected schema."""


class FileError(MinerscopeError):
    """Input file missing or unreadable."""
