"""Passport-model remote attestation for constrained relying parties."""

from .errors import (
    ApcrError,
    AttestationError,
    ChannelTimeout,
    ConfigError,
    EntropyError,
    FormatError,
    IntegrityError,
    NotIdle,
    SignatureError,
    StateError,
)

__version__ = "0.1.0"
