"""Canonical wire frames.

Frame layout::

    "RP" | version (1 byte) | tag (4 ASCII bytes) | field*

    field := length (4-byte big-endian) | magnitude (minimal big-endian)

Fields are the model's integers in declaration order, nested models
flattened depth-first. Zero is a zero-length field. Decoding is strict: a
leading zero byte, a short read or leftover bytes are errors naming the first
offending field.
"""

from __future__ import annotations

import inspect
from collections.abc import Iterator

from pydantic import BaseModel, ValidationError

from restpail.errors import (
    BadMagic,
    BadVersion,
    NonCanonical,
    TrailingBytes,
    Truncated,
    UnexpectedTag,
    UnknownTag,
)
from restpail.models import (
    AccsMsgA,
    AccsMsgB,
    AccsRequesterState,
    AddCiphertext,
    AuthRequest,
    AuthResponse,
    Certificate,
    CommonSecretCiphertext,
    ConvertedAddCiphertext,
    JointKey,
    KgcRecord,
    MixedCiphertext,
    MixToAddMsg1,
    MixToAddMsg2,
    MulCiphertext,
    PartialDecryption,
    PartialStrongKey,
    PublicParams,
    RecoveryRequest,
    RecoveryResponse,
    RegistrationRequest,
    SafePrime,
    StrongKey,
    UserKeyPair,
    UserSecrets,
)
from restpail.numeric import int_to_bytes

MAGIC = b"RP"
VERSION = 0x01
_LEN = 4

TAGS: dict[bytes, type[BaseModel]] = {
    b"PARM": PublicParams,
    b"SKEY": StrongKey,
    b"SPRM": SafePrime,
    b"PSKY": PartialStrongKey,
    b"UKEY": UserKeyPair,
    b"USEC": UserSecrets,
    b"JKEY": JointKey,
    b"ADDC": AddCiphertext,
    b"MULC": MulCiphertext,
    b"MIXC": MixedCiphertext,
    b"PDEC": PartialDecryption,
    b"MIX1": MixToAddMsg1,
    b"MIX2": MixToAddMsg2,
    b"CADD": ConvertedAddCiphertext,
    b"CSEC": CommonSecretCiphertext,
    b"ASTA": AccsRequesterState,
    b"ACCA": AccsMsgA,
    b"ACCB": AccsMsgB,
    b"REG ": RegistrationRequest,
    b"CERT": Certificate,
    b"KREC": KgcRecord,
    b"AUTQ": AuthRequest,
    b"AUTH": AuthResponse,
    b"RECQ": RecoveryRequest,
    b"RECR": RecoveryResponse,
}
_TAG_BY_TYPE: dict[type[BaseModel], bytes] = {cls: tag for tag, cls in TAGS.items()}


def _nested(annotation: object) -> type[BaseModel] | None:
    if inspect.isclass(annotation) and issubclass(annotation, BaseModel):
        return annotation
    return None


def field_count(cls: type[BaseModel]) -> int:
    """Number of integer fields in the flattened frame of ``cls``."""
    total = 0
    for field in cls.model_fields.values():
        sub = _nested(field.annotation)
        total += field_count(sub) if sub else 1
    return total


def _flatten(value: BaseModel) -> Iterator[int]:
    for name in type(value).model_fields:
        item = getattr(value, name)
        if isinstance(item, BaseModel):
            yield from _flatten(item)
        else:
            yield int(item)


def _build(cls: type[BaseModel], values: Iterator[int]) -> BaseModel:
    kwargs = {}
    for name, field in cls.model_fields.items():
        sub = _nested(field.annotation)
        kwargs[name] = _build(sub, values) if sub else next(values)
    return cls(**kwargs)


def tag_of(value: BaseModel | type[BaseModel]) -> str:
    cls = value if isinstance(value, type) else type(value)
    try:
        return _TAG_BY_TYPE[cls].decode("ascii")
    except KeyError:
        raise UnknownTag("tag", f"{cls.__name__} has no wire tag") from None


# ---------------------------------------------------------------------------
# Encode / decode
# ---------------------------------------------------------------------------

def encode(value: BaseModel) -> bytes:
    parts = [MAGIC, bytes([VERSION]), tag_of(value).encode("ascii")]
    for x in _flatten(value):
        raw = int_to_bytes(x)
        parts.append(len(raw).to_bytes(_LEN, "big"))
        parts.append(raw)
    return b"".join(parts)


def read_frame(buf: bytes, offset: int = 0) -> tuple[BaseModel, int]:
    """Decode one frame starting at ``offset``; returns (value, end offset)."""
    end = len(buf)
    if end - offset < 2:
        raise Truncated("magic")
    if buf[offset:offset + 2] != MAGIC:
        raise BadMagic("magic")
    offset += 2
    if end - offset < 1:
        raise Truncated("version")
    if buf[offset] != VERSION:
        raise BadVersion("version", f"unsupported version {buf[offset]}")
    offset += 1
    if end - offset < 4:
        raise Truncated("tag")
    tag = bytes(buf[offset:offset + 4])
    cls = TAGS.get(tag)
    if cls is None:
        raise UnknownTag("tag", repr(tag))
    offset += 4

    values = []
    for i in range(field_count(cls)):
        if end - offset < _LEN:
            raise Truncated(f"field[{i}].length")
        length = int.from_bytes(buf[offset:offset + _LEN], "big")
        offset += _LEN
        if end - offset < length:
            raise Truncated(f"field[{i}].value")
        raw = buf[offset:offset + length]
        if length and raw[0] == 0:
            raise NonCanonical(f"field[{i}].value", "leading zero byte")
        values.append(int.from_bytes(raw, "big"))
        offset += length

    try:
        value = _build(cls, iter(values))
    except ValidationError as exc:
        raise NonCanonical("tag", f"{tag.decode('ascii')} fields are inconsistent: {exc}") from exc
    return value, offset


def decode(buf: bytes, expect: type[BaseModel] | None = None) -> BaseModel:
    value, end = read_frame(buf, 0)
    if end != len(buf):
        raise TrailingBytes("frame", f"{len(buf) - end} bytes after the last field")
    if expect is not None and not isinstance(value, expect):
        raise UnexpectedTag("tag", f"wanted {tag_of(expect)}, got {tag_of(value)}")
    return value


def encode_hex(value: BaseModel) -> str:
    return encode(value).hex()


def decode_hex(text: str, expect: type[BaseModel] | None = None) -> BaseModel:
    try:
        raw = bytes.fromhex(text.strip())
    except ValueError:
        raise NonCanonical("hex", "not a hexadecimal frame") from None
    return decode(raw, expect)
