"""Ciphertext conversion between two users U_i and U_j sharing a joint key.

MultoMix lifts a multiplicative ciphertext into a mixed one in a single call.
MixtoAdd strips the multiplicative blinding in three message-producing steps:
U_j (step 1) -> U_i (step 2) -> U_j (step 3).
"""

from __future__ import annotations

import random

from restpail.cipher import blind, embed, randomness_bound
from restpail.models import (
    ConvertedAddCiphertext,
    JointKey,
    MixedCiphertext,
    MixToAddMsg1,
    MixToAddMsg2,
    MulCiphertext,
    PublicParams,
)
from restpail.numeric import mod_inverse, mulmod, powmod, resolve_rng, sample_range


def mul_to_mix(
    params: PublicParams,
    joint: JointKey,
    ct: MulCiphertext,
    rng: random.Random | None = None,
    *,
    r_prime: int | None = None,
) -> MixedCiphertext:
    """Additively encrypt mc1 under h_ij; mc2 rides along as the r_m trace."""
    if r_prime is None:
        r_prime = sample_range(1, randomness_bound(params), resolve_rng(rng))
    c1 = mulmod(blind(params, joint.h_joint, r_prime), embed(params, ct.mc1), params.n_sq)
    return MixedCiphertext(c1=c1, c2=ct.mc2)


def mix_to_add_step1(
    params: PublicParams,
    theta_j: int,
    ct: MixedCiphertext,
    rng: random.Random | None = None,
    *,
    s: int | None = None,
) -> MixToAddMsg1:
    """U_j: t1 = (c2 * g^s)^θ_j = g^((r_m + s)θ_j), t2 = g^s."""
    if s is None:
        s = sample_range(1, randomness_bound(params), resolve_rng(rng))
    t2 = powmod(params.g, s, params.n)
    t1 = powmod(mulmod(ct.c2, t2, params.n), theta_j, params.n)
    return MixToAddMsg1(c1=ct.c1, t1=t1, t2=t2)


def mix_to_add_step2(params: PublicParams, theta_i: int, msg: MixToAddMsg1) -> MixToAddMsg2:
    """U_i: divide the payload by u = h_ij^(r_m + s); forward T2 = g^(sθ_i)."""
    u = powmod(msg.t1, theta_i, params.n)
    c1_prime = powmod(msg.c1, mod_inverse(u, params.n), params.n_sq)
    return MixToAddMsg2(c1_prime=c1_prime, t2_theta=powmod(msg.t2, theta_i, params.n))


def mix_to_add_step3(
    params: PublicParams, theta_j: int, msg: MixToAddMsg2
) -> ConvertedAddCiphertext:
    """U_j: multiply the payload back by v = h_ij^s, leaving exactly m."""
    v = powmod(msg.t2_theta, theta_j, params.n)
    return ConvertedAddCiphertext(c1=powmod(msg.c1_prime, v, params.n_sq))


def mix_to_add(
    params: PublicParams,
    theta_i: int,
    theta_j: int,
    ct: MixedCiphertext,
    rng: random.Random | None = None,
) -> ConvertedAddCiphertext:
    """All three steps in one process, for benchmarks and local tooling."""
    msg1 = mix_to_add_step1(params, theta_j, ct, rng)
    msg2 = mix_to_add_step2(params, theta_i, msg1)
    return mix_to_add_step3(params, theta_j, msg2)
