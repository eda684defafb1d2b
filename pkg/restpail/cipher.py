"""Encryption, decryption and homomorphic operators for the three ciphertext families.

Additive ciphertexts live in Z_{N²} x Z_N, multiplicative ones in Z_N x Z_N.
Mixed ciphertexts carry a multiplicatively blinded payload m * h^r_m in the
additive slot, so the strong key only ever recovers the blinded value.
"""

from __future__ import annotations

import random

from restpail.errors import InvalidParameters, MessageOutOfRange, NotUnitResidue
from restpail.models import (
    AddCiphertext,
    ConvertedAddCiphertext,
    MixedCiphertext,
    MulCiphertext,
    PartialDecryption,
    PartialStrongKey,
    PublicParams,
)
from restpail.numeric import (
    gcd,
    l_function,
    mod_inverse,
    mulmod,
    powmod,
    resolve_rng,
    sample_range,
)

# Anything with a payload component mod N²
StrongDecryptable = AddCiphertext | MixedCiphertext | ConvertedAddCiphertext


def randomness_bound(params: PublicParams) -> int:
    """Upper end of the encryption randomness range [1, N/4]."""
    return params.n // 4


def _check_message(params: PublicParams, m: int, what: str = "message") -> None:
    if not 0 <= m < params.n:
        raise MessageOutOfRange(f"{what} must lie in [0, N)")


def _draw_r(params: PublicParams, rng: random.Random | None) -> int:
    return sample_range(1, randomness_bound(params), resolve_rng(rng))


def payload_component(ct: StrongDecryptable) -> int:
    if isinstance(ct, AddCiphertext):
        return ct.ac1
    if isinstance(ct, MixedCiphertext | ConvertedAddCiphertext):
        return ct.c1
    raise InvalidParameters(f"{type(ct).__name__} has no mod N^2 payload component")


def embed(params: PublicParams, x: int) -> int:
    """1 + xN mod N²."""
    return (1 + x * params.n) % params.n_sq


def blind(params: PublicParams, base: int, r: int) -> int:
    """(base^r mod N)^N mod N², the N-th power blinding factor."""
    return powmod(powmod(base, r, params.n), params.n, params.n_sq)


# ---------------------------------------------------------------------------
# Additive family
# ---------------------------------------------------------------------------

def add_enc(
    params: PublicParams,
    h: int,
    m: int,
    rng: random.Random | None = None,
    *,
    r: int | None = None,
) -> AddCiphertext:
    _check_message(params, m)
    if r is None:
        r = _draw_r(params, rng)
    ac1 = mulmod(blind(params, h, r), embed(params, m), params.n_sq)
    ac2 = powmod(params.g, r, params.n)
    return AddCiphertext(ac1=ac1, ac2=ac2)


def add_dec_weak(params: PublicParams, theta: int, ct: AddCiphertext) -> int:
    if gcd(ct.ac2, params.n) != 1:
        raise NotUnitResidue("ac2 is not a unit mod N")
    mask = powmod(powmod(ct.ac2, theta, params.n), params.n, params.n_sq)
    return l_function(mulmod(ct.ac1, mod_inverse(mask, params.n_sq), params.n_sq), params.n)


def add_dec_strong(params: PublicParams, lam: int, ct: StrongDecryptable) -> int:
    """m = L(c^λ mod N²) * λ⁻¹ mod N; the second component is ignored."""
    u = powmod(payload_component(ct), lam, params.n_sq)
    return mulmod(l_function(u, params.n), mod_inverse(lam, params.n), params.n)


def add_dec_partial_1(
    params: PublicParams, share: PartialStrongKey, ct: StrongDecryptable
) -> PartialDecryption:
    dc = powmod(payload_component(ct), share.share, params.n_sq)
    return PartialDecryption(dc=dc, label=share.label)


def add_dec_partial_2(
    params: PublicParams,
    share: PartialStrongKey,
    ct: StrongDecryptable,
    dc1: PartialDecryption,
) -> int:
    """Combine the peer's partial decryption with our own share."""
    if share.label == dc1.label:
        raise InvalidParameters("both partial decryptions come from the same share")
    own = powmod(payload_component(ct), share.share, params.n_sq)
    return l_function(mulmod(dc1.dc, own, params.n_sq), params.n)


def add_ct_add(params: PublicParams, ct1: AddCiphertext, ct2: AddCiphertext) -> AddCiphertext:
    return AddCiphertext(
        ac1=mulmod(ct1.ac1, ct2.ac1, params.n_sq),
        ac2=mulmod(ct1.ac2, ct2.ac2, params.n),
    )


def add_ct_scalar(params: PublicParams, ct: AddCiphertext, k: int) -> AddCiphertext:
    _check_message(params, k, "scalar")
    return AddCiphertext(
        ac1=powmod(ct.ac1, k, params.n_sq),
        ac2=powmod(ct.ac2, k, params.n),
    )


# ---------------------------------------------------------------------------
# Multiplicative family
# ---------------------------------------------------------------------------

def mul_enc(
    params: PublicParams,
    h: int,
    m: int,
    rng: random.Random | None = None,
    *,
    r: int | None = None,
) -> MulCiphertext:
    _check_message(params, m)
    if r is None:
        r = _draw_r(params, rng)
    return MulCiphertext(
        mc1=mulmod(m, powmod(h, r, params.n), params.n),
        mc2=powmod(params.g, r, params.n),
    )


def mul_dec(params: PublicParams, theta: int, ct: MulCiphertext) -> int:
    mask = powmod(ct.mc2, theta, params.n)
    return mulmod(ct.mc1, mod_inverse(mask, params.n), params.n)


def mul_ct_mul(params: PublicParams, ct1: MulCiphertext, ct2: MulCiphertext) -> MulCiphertext:
    return MulCiphertext(
        mc1=mulmod(ct1.mc1, ct2.mc1, params.n),
        mc2=mulmod(ct1.mc2, ct2.mc2, params.n),
    )


# ---------------------------------------------------------------------------
# Mixed family
# ---------------------------------------------------------------------------

def mixed_scalar_exp(params: PublicParams, ct: MixedCiphertext, e: int) -> MixedCiphertext:
    """Scale the payload by e; c2 keeps tracking the original g^r_m."""
    if not 0 < e < params.n:
        raise MessageOutOfRange("exponent must lie in (0, N)")
    return MixedCiphertext(c1=powmod(ct.c1, e, params.n_sq), c2=ct.c2)


def mixed_add_plain(params: PublicParams, ct: MixedCiphertext, x: int) -> MixedCiphertext:
    _check_message(params, x, "addend")
    return MixedCiphertext(c1=mulmod(ct.c1, embed(params, x), params.n_sq), c2=ct.c2)
