"""Domain models for restpail.

Every key, ciphertext, protocol message and report row is a frozen Pydantic v2
model. Field order is significant: the wire codec encodes fields in
declaration order, nested models depth-first.
"""

from __future__ import annotations

import uuid
from datetime import datetime, timezone
from enum import Enum, IntEnum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, model_validator


def _uuid() -> str:
    return str(uuid.uuid4())


def _now() -> datetime:
    return datetime.now(timezone.utc)


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True)


# ---------------------------------------------------------------------------
# Enums
# ---------------------------------------------------------------------------

class ShareLabel(IntEnum):
    """Which half of a strong-key split a share is (sigk / verk in the KGC role)."""

    FIRST = 1
    SECOND = 2


class Verdict(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


class AuditAction(str, Enum):
    """Actions tracked in the append-only audit log."""

    PARAMS_GENERATED = "params_generated"
    KEY_SPLIT = "key_split"
    CERTIFICATE_ISSUED = "certificate_issued"
    IDENTITY_VERIFIED = "identity_verified"
    IDENTITY_REJECTED = "identity_rejected"
    RECOVERY_SERVED = "recovery_served"
    RECOVERY_RETRY = "recovery_retry"
    PROTOCOL_COMPLETED = "protocol_completed"


# ---------------------------------------------------------------------------
# Parameters and keys
# ---------------------------------------------------------------------------

class SafePrime(_Frozen):
    """p = 2 * p_half + 1 with both prime."""

    p: NonNegativeInt
    p_half: NonNegativeInt

    @model_validator(mode="after")
    def _check_relation(self) -> SafePrime:
        if self.p != 2 * self.p_half + 1:
            raise ValueError("p must equal 2 * p_half + 1")
        return self


class PublicParams(_Frozen):
    n: NonNegativeInt
    n_sq: NonNegativeInt
    g: NonNegativeInt
    bits: NonNegativeInt

    @model_validator(mode="after")
    def _check_shape(self) -> PublicParams:
        if self.n_sq != self.n * self.n:
            raise ValueError("n_sq must equal n * n")
        if not 1 < self.g < self.n:
            raise ValueError("g must lie in (1, n)")
        if self.bits != self.n.bit_length():
            raise ValueError("bits must equal the bit length of n")
        return self

    @property
    def hash_bits(self) -> int:
        """Output width of hash_to_int: a quarter of |N|."""
        return self.bits // 4


class StrongKey(_Frozen):
    lam: NonNegativeInt
    p: SafePrime
    q: SafePrime

    @model_validator(mode="after")
    def _check_lambda(self) -> StrongKey:
        if self.lam != 2 * self.p.p_half * self.q.p_half:
            raise ValueError("lam must equal 2 * p_half * q_half")
        return self

    @property
    def n(self) -> int:
        return self.p.p * self.q.p


class PartialStrongKey(_Frozen):
    share: NonNegativeInt
    label: ShareLabel


class UserKeyPair(_Frozen):
    theta: NonNegativeInt
    h: NonNegativeInt


class JointKey(_Frozen):
    h_joint: NonNegativeInt


class UserSecrets(_Frozen):
    """What a registered user keeps: θ and θ_r = θ + H(r)."""

    theta: NonNegativeInt
    theta_r: NonNegativeInt


# ---------------------------------------------------------------------------
# Ciphertexts
# ---------------------------------------------------------------------------

class AddCiphertext(_Frozen):
    ac1: NonNegativeInt
    ac2: NonNegativeInt


class MulCiphertext(_Frozen):
    mc1: NonNegativeInt
    mc2: NonNegativeInt


class MixedCiphertext(_Frozen):
    """c1 carries the blinded payload m * h^r_m; c2 = g^r_m is left unscaled."""

    c1: NonNegativeInt
    c2: NonNegativeInt


class PartialDecryption(_Frozen):
    dc: NonNegativeInt
    label: ShareLabel


class MixToAddMsg1(_Frozen):
    c1: NonNegativeInt
    t1: NonNegativeInt
    t2: NonNegativeInt


class MixToAddMsg2(_Frozen):
    c1_prime: NonNegativeInt
    t2_theta: NonNegativeInt


class ConvertedAddCiphertext(_Frozen):
    c1: NonNegativeInt


# ---------------------------------------------------------------------------
# Common-secret access control
# ---------------------------------------------------------------------------

class CommonSecretCiphertext(_Frozen):
    mixed: MixedCiphertext


class AccsRequesterState(_Frozen):
    """Masks the requester keeps between its first and last step."""

    a: NonNegativeInt
    d: NonNegativeInt
    b: NonNegativeInt
    a_pow: NonNegativeInt
    lambda_j: PartialStrongKey


class AccsMsgA(_Frozen):
    t1: NonNegativeInt
    d_times_a_inv: NonNegativeInt
    ct_bds: MixedCiphertext


class AccsMsgB(_Frozen):
    result: MixedCiphertext
    result_partial: NonNegativeInt


# ---------------------------------------------------------------------------
# Identity, authentication and recovery
# ---------------------------------------------------------------------------

class RegistrationRequest(_Frozen):
    reg: NonNegativeInt


class Certificate(_Frozen):
    id: NonNegativeInt
    cert1: NonNegativeInt
    cert2: NonNegativeInt


class KgcRecord(_Frozen):
    id: NonNegativeInt
    cert: Certificate
    reg: RegistrationRequest


class AuthRequest(_Frozen):
    pass


class AuthResponse(_Frozen):
    h: NonNegativeInt
    cert: Certificate


class RecoveryRequest(_Frozen):
    id: NonNegativeInt


class RecoveryResponse(_Frozen):
    r: NonNegativeInt


# ---------------------------------------------------------------------------
# Harness transcripts
# ---------------------------------------------------------------------------

class TranscriptEntry(_Frozen):
    step: str
    sender: str
    receiver: str
    tag: str
    frame: str  # hex of the encoded wire frame
    message: Any = None
    setup: bool = False

    @property
    def size(self) -> int:
        return len(self.frame) // 2


class Transcript(_Frozen):
    protocol: str
    n_bits: int
    seed: int | str | None = None
    entries: list[TranscriptEntry] = Field(default_factory=list)
    outputs: dict[str, Any] = Field(default_factory=dict)

    @property
    def messages(self) -> list[TranscriptEntry]:
        """Protocol messages only, setup ciphertexts excluded."""
        return [e for e in self.entries if not e.setup]

    def frames(self) -> list[str]:
        return [e.frame for e in self.entries]


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------

class BenchRow(_Frozen):
    algorithm: str
    n_bits: int
    mean_ms: float
    modmul_count: int
    iterations: int = Field(ge=1)


class ProtocolCostRow(_Frozen):
    protocol: str
    role: str
    n_bits: int
    iterations: int = Field(ge=1)
    mean_ms: float
    modmul_count: int


class CommCostRow(_Frozen):
    protocol: str
    n_bits: int
    messages: int
    bytes: int


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------

class AuditEvent(BaseModel):
    """Append-only event for the KGC audit trail."""

    event_id: str = Field(default_factory=_uuid)
    action: AuditAction
    actor_id: str = ""  # "kgc", "user:<id>", "harness"
    target_id: str = ""  # certificate id, protocol name
    target_type: str = ""  # "certificate", "params", "protocol"
    details: dict[str, Any] = Field(default_factory=dict)
    timestamp: datetime = Field(default_factory=_now)
