"""Exception types shared across the package."""


class NeurokdcError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(NeurokdcError):
    """Two machine-sized objects disagree on (k, n) or parameters."""


class ConfigInvalid(NeurokdcError):
    """A session or experiment configuration violates its invariants."""


class InvalidState(NeurokdcError):
    """Operation called on a session state that no longer accepts it."""


class BoundExceeded(NeurokdcError):
    """Weight bound too large for the one-byte-per-weight key layout."""


class WireError(NeurokdcError):
    """Base class for frame codec errors."""


class Truncated(WireError):
    """More bytes are needed to complete the frame."""


class UnknownType(WireError):
    """Frame carries an unassigned message type octet."""


class Oversize(WireError):
    """Declared payload length exceeds the frame size cap."""


class MalformedPayload(WireError):
    """Payload length or field values inconsistent with the message type."""


class NetError(NeurokdcError):
    """Base class for client/server transport failures."""


class ConnectionLost(NetError):
    """Peer closed or reset the connection mid-session."""


class ProtocolViolation(NetError):
    """Peer sent a frame that is invalid at this point of the exchange."""


class Timeout(NetError):
    """Per-message deadline expired."""
