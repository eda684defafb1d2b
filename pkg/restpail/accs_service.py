"""Access control of a common secret between a requester U_j and a helper U_i.

U_j holds θ_j and the second strong-key share; U_i holds θ_i and the first.
Both share the joint key h_ij. After three steps U_j learns bS + c mod N and
nothing else about S, where b is its own multiplier and c the helper's
control factor.
"""

from __future__ import annotations

import logging
import random

from restpail.cipher import (
    add_dec_partial_2,
    mixed_add_plain,
    mixed_scalar_exp,
    mul_enc,
    randomness_bound,
)
from restpail.config import settings
from restpail.convert import mul_to_mix
from restpail.errors import ExhaustedAttempts, MessageOutOfRange, NotInvertible
from restpail.models import (
    AccsMsgA,
    AccsMsgB,
    AccsRequesterState,
    CommonSecretCiphertext,
    JointKey,
    MixedCiphertext,
    PartialDecryption,
    PartialStrongKey,
    PublicParams,
    ShareLabel,
)
from restpail.numeric import gcd, mod_inverse, mulmod, powmod, resolve_rng, sample_range

logger = logging.getLogger(__name__)


def factor_bound(params: PublicParams) -> int:
    """Upper end of the range [1, N/8] for b and c."""
    return params.n // 8


def _check_factor(params: PublicParams, x: int, name: str) -> None:
    if not 1 <= x <= factor_bound(params):
        raise MessageOutOfRange(f"{name} must lie in [1, N/8]")


def accs_encrypt_secret(
    params: PublicParams,
    joint: JointKey,
    secret: int,
    rng: random.Random | None = None,
    *,
    r: int | None = None,
    r_prime: int | None = None,
) -> CommonSecretCiphertext:
    """E*(S): multiplicative encryption under h_ij lifted to a mixed ciphertext."""
    rng = resolve_rng(rng)
    ct = mul_enc(params, joint.h_joint, secret, rng, r=r)
    return CommonSecretCiphertext(mixed=mul_to_mix(params, joint, ct, rng, r_prime=r_prime))


def accs_step1(
    params: PublicParams,
    joint: JointKey,
    theta_j: int,
    lambda_j: PartialStrongKey,
    b: int,
    ct: CommonSecretCiphertext,
    rng: random.Random | None = None,
    *,
    a: int | None = None,
    d: int | None = None,
) -> tuple[AccsMsgA, AccsRequesterState]:
    """Requester: mask the secret by b*d and hand the helper t1 and d/A."""
    _check_factor(params, b, "b")
    rng = resolve_rng(rng)
    n = params.n
    bound = randomness_bound(params)
    forced = a is not None or d is not None

    for _ in range(settings.protocol.sample_attempts):
        a_val = a if a is not None else sample_range(1, bound, rng)
        d_val = d if d is not None else sample_range(1, bound, rng)
        a_pow = powmod(joint.h_joint, a_val, n)
        if gcd(a_pow, n) == 1 and gcd(d_val, n) == 1:
            break
        if forced:
            raise NotInvertible("forced ACCS mask is not a unit mod N")
        logger.debug("ACCS mask redrawn")
    else:
        raise ExhaustedAttempts("no invertible ACCS masks drawn")

    t1 = powmod(mulmod(ct.mixed.c2, powmod(params.g, a_val, n), n), theta_j, n)
    msg = AccsMsgA(
        t1=t1,
        d_times_a_inv=mulmod(d_val, mod_inverse(a_pow, n), n),
        ct_bds=mixed_scalar_exp(params, ct.mixed, mulmod(b, d_val, n)),
    )
    state = AccsRequesterState(a=a_val, d=d_val, b=b, a_pow=a_pow, lambda_j=lambda_j)
    return msg, state


def accs_step2(
    params: PublicParams,
    theta_i: int,
    lambda_i: PartialStrongKey,
    c: int,
    msg: AccsMsgA,
) -> AccsMsgB:
    """Helper: add c*d under the blinding, strip h^(r_m + a), partially decrypt."""
    _check_factor(params, c, "c")
    n = params.n
    t2 = powmod(msg.t1, theta_i, n)
    t3 = mod_inverse(t2, n)
    addend = mulmod(mulmod(c, msg.d_times_a_inv, n), t2, n)
    result = mixed_scalar_exp(params, mixed_add_plain(params, msg.ct_bds, addend), t3)
    return AccsMsgB(result=result, result_partial=powmod(result.c1, lambda_i.share, params.n_sq))


def accs_step3(params: PublicParams, state: AccsRequesterState, msg: AccsMsgB) -> int:
    """Requester: cancel A⁻¹, finish the split decryption, divide out d."""
    n_sq = params.n_sq
    lifted = MixedCiphertext(c1=powmod(msg.result.c1, state.a_pow, n_sq), c2=msg.result.c2)
    peer = PartialDecryption(
        dc=powmod(msg.result_partial, state.a_pow, n_sq),
        label=ShareLabel.FIRST if state.lambda_j.label is ShareLabel.SECOND else ShareLabel.SECOND,
    )
    masked = add_dec_partial_2(params, state.lambda_j, lifted, peer)
    return mulmod(masked, mod_inverse(state.d, params.n), params.n)
