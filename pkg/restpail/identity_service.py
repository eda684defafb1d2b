"""Identity distribution, authentication and private-key recovery.

The KGC holds λ and the signing share sigk; the verification share verk is
public. A user registers by sending Reg = (g^θ_r mod N)^N (1 + rN) with
θ_r = θ + H(r), so the KGC sees neither θ nor θ_r.
"""

from __future__ import annotations

import logging
import random
from collections.abc import Callable

from restpail.cipher import add_dec_strong, blind, embed, randomness_bound
from restpail.config import settings
from restpail.errors import (
    DuplicateId,
    ExhaustedAttempts,
    NotInvertible,
    NotUnitResidue,
    VerificationFailed,
)
from restpail.keyring import gen_user_key, theta_bound
from restpail.kgc_store import KgcStore
from restpail.models import (
    Certificate,
    ConvertedAddCiphertext,
    KgcRecord,
    PartialStrongKey,
    PublicParams,
    RegistrationRequest,
    StrongKey,
    UserKeyPair,
    UserSecrets,
    Verdict,
)
from restpail.numeric import (
    hash_int,
    l_function,
    mod_inverse,
    mulmod,
    powmod,
    resolve_rng,
    sample_range,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Registration and issuance
# ---------------------------------------------------------------------------

def register_begin(
    params: PublicParams,
    rng: random.Random | None = None,
    *,
    theta: int | None = None,
    r: int | None = None,
) -> tuple[UserSecrets, UserKeyPair, RegistrationRequest]:
    rng = resolve_rng(rng)
    key = gen_user_key(params, rng, theta=theta)
    if r is None:
        r = sample_range(1, randomness_bound(params), rng)
    hr = hash_int(r, params)
    theta_r = key.theta + hr
    # g^θ_r mod N = h * g^H(r) mod N
    g_theta_r = mulmod(key.h, powmod(params.g, hr, params.n), params.n)
    reg = mulmod(powmod(g_theta_r, params.n, params.n_sq), embed(params, r), params.n_sq)
    return (
        UserSecrets(theta=key.theta, theta_r=theta_r),
        key,
        RegistrationRequest(reg=reg),
    )


def kgc_issue(
    params: PublicParams,
    sigk: PartialStrongKey,
    store: KgcStore,
    reg: RegistrationRequest,
    rng: random.Random | None = None,
    *,
    identity: int | None = None,
) -> Certificate:
    """Assign a fresh identity, certify the registration and persist the record."""
    rng = resolve_rng(rng)
    domain = theta_bound(params)
    store.check_capacity(domain)

    for _ in range(settings.protocol.id_attempts):
        ident = identity if identity is not None else sample_range(1, domain, rng)
        if ident not in store:
            cert1 = mulmod(blind(params, params.g, ident), reg.reg, params.n_sq)
            cert = Certificate(
                id=ident, cert1=cert1, cert2=powmod(cert1, sigk.share, params.n_sq)
            )
            try:
                store.insert(KgcRecord(id=ident, cert=cert, reg=reg))
            except DuplicateId:
                # taken by a concurrent issue since the membership check
                if identity is not None:
                    raise
            else:
                logger.info("certificate issued for a %d-bit identity", ident.bit_length())
                return cert
        elif identity is not None:
            raise DuplicateId(f"identity {identity} already issued")
        logger.debug("identity collision redrawn")

    raise ExhaustedAttempts(f"no free identity in {settings.protocol.id_attempts} draws")


# ---------------------------------------------------------------------------
# Authentication
# ---------------------------------------------------------------------------

def certificate_nonce(params: PublicParams, verk: PartialStrongKey, cert: Certificate) -> int:
    """r = L(cert1^verk * cert2 mod N²)."""
    combined = mulmod(powmod(cert.cert1, verk.share, params.n_sq), cert.cert2, params.n_sq)
    return l_function(combined, params.n)


def auth_verify(
    params: PublicParams,
    verk: PartialStrongKey,
    h: int,
    identity: int,
    cert: Certificate,
) -> Verdict:
    """Accept iff cert1 = (h * g^(H(r) + ID) mod N)^N (1 + rN) mod N²."""
    n, n_sq = params.n, params.n_sq
    if identity != cert.id or not 1 < h < n:
        return Verdict.REJECT
    if not (0 < cert.cert1 < n_sq and 0 < cert.cert2 < n_sq):
        return Verdict.REJECT
    try:
        r = certificate_nonce(params, verk, cert)
        base = mulmod(h, powmod(params.g, hash_int(r, params) + identity, n), n)
        expected = mulmod(powmod(base, n, n_sq), embed(params, r), n_sq)
        ok = mulmod(cert.cert1, mod_inverse(expected, n_sq), n_sq) == 1
    except (NotUnitResidue, NotInvertible):
        return Verdict.REJECT
    return Verdict.ACCEPT if ok else Verdict.REJECT


# ---------------------------------------------------------------------------
# Private-key recovery
# ---------------------------------------------------------------------------

def kgc_recover(params: PublicParams, sk: StrongKey, store: KgcStore, identity: int) -> int:
    """KGC side: strong-decrypt cert1 back to the registration nonce r."""
    record = store.get(identity)
    r = add_dec_strong(params, sk.lam, ConvertedAddCiphertext(c1=record.cert.cert1))
    logger.info("recovery served for a %d-bit identity", identity.bit_length())
    return r


def user_recover(params: PublicParams, theta_r: int, h: int, r: int) -> int:
    """User side: check g^θ_r = h * g^H(r) mod N, then θ = θ_r - H(r)."""
    hr = hash_int(r, params)
    lhs = powmod(params.g, theta_r, params.n)
    rhs = mulmod(h, powmod(params.g, hr, params.n), params.n)
    theta = theta_r - hr
    if lhs != rhs or theta < 1:
        raise VerificationFailed("recovered nonce does not match the retained key")
    return theta


def recover_private_key(
    params: PublicParams,
    sk: StrongKey,
    store: KgcStore,
    identity: int,
    theta_r: int,
    h: int,
    *,
    kgc: Callable[[int], int] | None = None,
) -> int:
    """Re-run the KGC answer and the user check until one verifies.

    ``kgc`` replaces the KGC's answer function (identity -> r).
    """
    answer = kgc or (lambda ident: kgc_recover(params, sk, store, ident))
    attempts = settings.protocol.recovery_attempts
    for attempt in range(1, attempts + 1):
        r = answer(identity)
        try:
            return user_recover(params, theta_r, h, r)
        except VerificationFailed:
            if attempt == attempts:
                raise
            logger.warning("recovery check failed (round %d of %d), retrying", attempt, attempts)
    raise ExhaustedAttempts("recovery budget is zero")
