"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class ApcrError(Exception):
    """Base class for all protocol errors."""


class EntropyError(ApcrError):
    """The entropy source could not produce random bytes."""


class IntegrityError(ApcrError):
    """Authenticated decryption failed (wrong key or modified ciphertext)."""


class SignatureError(ApcrError):
    """A signature did not verify over the given message."""


class AttestationError(ApcrError):
    """A key-attestation envelope is forged, damaged or the TEE is unavailable."""


class FormatError(ApcrError):
    """Octets do not parse as the expected structure."""


class StateError(ApcrError):
    """An operation was invoked in a state that does not allow it."""


class NotIdle(StateError):
    """A run is already in flight on this session."""


class ConfigError(ApcrError):
    """Bad topology, adversary script or demo configuration."""


class ChannelTimeout(ApcrError, TimeoutError):
    """No frame arrived within the receive budget."""
