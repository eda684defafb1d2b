"""Error hierarchy shared by the crypto core, the protocols and the shell.

Every error carries a stable snake_case ``code`` so callers (and the CLI) can
branch on the failure class without parsing messages.
"""

from __future__ import annotations


class RestPailError(Exception):
    """Root of every error raised by restpail."""

    code = "restpail_error"
    exit_code = 2

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code

    def to_dict(self) -> dict[str, str]:
        return {"code": self.code, "message": self.message}


# ---------------------------------------------------------------------------
# Cryptographic failures
# ---------------------------------------------------------------------------

class CryptoError(RestPailError):
    code = "crypto_error"


class NotUnitResidue(CryptoError):
    """L-function input is not congruent to 1 mod N (wrong key or corrupt ciphertext)."""

    code = "not_unit_residue"


class NotInvertible(CryptoError):
    """No modular inverse exists. Modulo N this exposes a factor and aborts the session."""

    code = "not_invertible"


class DegenerateKey(CryptoError):
    code = "degenerate_key"


class VerificationFailed(CryptoError):
    code = "verification_failed"


class ExhaustedAttempts(RestPailError):
    """A retry budget ran out (bad randomness source or a size too small to search)."""

    code = "exhausted_attempts"


# ---------------------------------------------------------------------------
# Domain / range violations
# ---------------------------------------------------------------------------

class RangeError(RestPailError):
    code = "range_error"
    exit_code = 1


class MessageOutOfRange(RangeError):
    code = "message_out_of_range"


class InvalidParameters(RangeError):
    code = "invalid_parameters"


# ---------------------------------------------------------------------------
# KGC store
# ---------------------------------------------------------------------------

class StoreError(RestPailError):
    code = "store_error"


class UnknownId(StoreError):
    code = "unknown_id"


class DuplicateId(StoreError):
    code = "duplicate_id"


class StoreFull(StoreError):
    code = "store_full"


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------

class WireError(RestPailError):
    code = "wire_error"
    exit_code = 3

    def __init__(self, field: str, message: str = ""):
        super().__init__(f"{field}: {message}" if message else field)
        self.field = field


class BadMagic(WireError):
    code = "bad_magic"


class BadVersion(WireError):
    code = "bad_version"


class UnknownTag(WireError):
    code = "unknown_tag"


class UnexpectedTag(WireError):
    code = "unexpected_tag"


class Truncated(WireError):
    code = "truncated"


class TrailingBytes(WireError):
    code = "trailing_bytes"


class NonCanonical(WireError):
    code = "non_canonical"


# ---------------------------------------------------------------------------
# Harness
# ---------------------------------------------------------------------------

class ProtocolStepError(RestPailError):
    """A role step failed inside the in-process harness; the cause is chained."""

    code = "protocol_step_failed"

    def __init__(self, step: str, cause: BaseException):
        super().__init__(f"{step} failed: {cause}")
        self.step = step
        self.cause = cause
