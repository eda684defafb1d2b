"""Key generation: system parameters, weak user keys, joint keys, strong-key split."""

from __future__ import annotations

import logging
import random

from restpail.config import settings
from restpail.errors import DegenerateKey, ExhaustedAttempts, InvalidParameters
from restpail.models import (
    JointKey,
    PartialStrongKey,
    PublicParams,
    SafePrime,
    ShareLabel,
    StrongKey,
    UserKeyPair,
)
from restpail.numeric import (
    gcd,
    gen_safe_prime,
    is_probable_prime,
    mod_inverse,
    powmod,
    resolve_rng,
    sample_range,
)

logger = logging.getLogger(__name__)

MIN_BITS = 10
BALANCED_FROM_BITS = 32


# ---------------------------------------------------------------------------
# System parameters
# ---------------------------------------------------------------------------

def has_full_order(g: int, n: int, p_half: int, q_half: int) -> bool:
    """True iff the multiplicative order of g mod N is exactly 2p'q'."""
    lam = 2 * p_half * q_half
    if powmod(g, lam, n) != 1:
        return False
    return all(powmod(g, lam // ell, n) != 1 for ell in (2, p_half, q_half))


def _safe_prime_from(p: int) -> SafePrime:
    if p < 7 or p % 2 == 0 or not is_probable_prime(p) or not is_probable_prime((p - 1) // 2):
        raise InvalidParameters(f"{p} is not a safe prime with an odd half")
    return SafePrime(p=p, p_half=(p - 1) // 2)


def _pair_is_usable(p: SafePrime, q: SafePrime) -> bool:
    # p' = q or q' = p would put a factor of N into λ
    return p.p != q.p and p.p_half != q.p and q.p_half != p.p


def _draw_prime_pair(bits: int, rng: random.Random) -> tuple[SafePrime, SafePrime]:
    if bits < BALANCED_FROM_BITS:
        # at desk sizes balanced safe primes barely exist, so the split floats
        p_bits = sample_range(3, bits // 2, rng)
        q_bits = bits - p_bits + sample_range(0, 1, rng)
        return gen_safe_prime(p_bits, rng), gen_safe_prime(q_bits, rng)
    half = bits // 2
    return (
        gen_safe_prime(half, rng, top_two_bits=True),
        gen_safe_prime(bits - half, rng, top_two_bits=True),
    )


def _find_base(n: int, p: SafePrime, q: SafePrime, rng: random.Random) -> int:
    """g = -a^{2N} mod N for a unit a of Z_{N²} with a mod N ≠ 1, resampled until ord(g) = λ."""
    n_sq = n * n
    for attempt in range(1, settings.keygen.base_attempts + 1):
        a = sample_range(2, n_sq - 1, rng)
        if a % n == 1 or gcd(a, n) != 1:
            continue
        g = (n - powmod(a, 2 * n, n)) % n
        if g > 1 and has_full_order(g, n, p.p_half, q.p_half):
            return g
        logger.debug("base candidate %d rejected (order below 2p'q')", attempt)
    raise ExhaustedAttempts(f"no base of full order in {settings.keygen.base_attempts} draws")


def _assemble(p: SafePrime, q: SafePrime, rng: random.Random) -> tuple[PublicParams, StrongKey]:
    n = p.p * q.p
    g = _find_base(n, p, q, rng)
    params = PublicParams(n=n, n_sq=n * n, g=g, bits=n.bit_length())
    sk = StrongKey(lam=2 * p.p_half * q.p_half, p=p, q=q)
    return params, sk


def gen_params(
    bits: int,
    rng: random.Random | None = None,
    *,
    primes: tuple[int, int] | None = None,
    max_attempts: int | None = None,
) -> tuple[PublicParams, StrongKey]:
    """Generate (N, g) and the strong key λ = 2p'q'.

    ``primes`` forces the safe-prime pair (then ``bits`` is informational);
    an unusable forced pair raises InvalidParameters instead of resampling.
    """
    rng = resolve_rng(rng)

    if primes is not None:
        p, q = (_safe_prime_from(x) for x in primes)
        if not _pair_is_usable(p, q):
            raise InvalidParameters(f"safe primes {p.p} and {q.p} give gcd(λ, N) ≠ 1 or p = q")
        params, sk = _assemble(p, q, rng)
        logger.info("parameters assembled from fixed primes (%d-bit N)", params.bits)
        return params, sk

    if bits < MIN_BITS:
        raise InvalidParameters(f"|N| must be at least {MIN_BITS} bits, got {bits}")

    budget = max_attempts or settings.keygen.param_attempts
    for attempt in range(1, budget + 1):
        p, q = _draw_prime_pair(bits, rng)
        if not _pair_is_usable(p, q):
            logger.debug("prime pair %d rejected (p = q or p' = q or q' = p)", attempt)
            continue
        if (p.p * q.p).bit_length() != bits:
            continue
        params, sk = _assemble(p, q, rng)
        logger.info("parameters generated: %d-bit N after %d prime pairs", bits, attempt)
        return params, sk

    raise ExhaustedAttempts(f"no usable {bits}-bit parameter set in {budget} prime pairs")


# ---------------------------------------------------------------------------
# User keys
# ---------------------------------------------------------------------------

def theta_bound(params: PublicParams) -> int:
    """Upper end of the weak-key range [1, ⌊N²/4⌋]."""
    return params.n_sq // 4


def gen_user_key(
    params: PublicParams,
    rng: random.Random | None = None,
    *,
    theta: int | None = None,
) -> UserKeyPair:
    """Draw θ from [1, ⌊N²/4⌋] and publish h = g^θ mod N.

    A forced ``theta`` is tried first; if it gives h = 1 it is discarded and
    θ is redrawn.
    """
    rng = resolve_rng(rng)
    hi = theta_bound(params)
    if theta is not None and not 1 <= theta <= hi:
        raise InvalidParameters("theta outside [1, N^2/4]")

    proposal = theta
    for _ in range(settings.keygen.key_attempts):
        t = proposal if proposal is not None else sample_range(1, hi, rng)
        proposal = None
        h = powmod(params.g, t, params.n)
        if h != 1:
            return UserKeyPair(theta=t, h=h)
        logger.debug("weak key with h = 1 redrawn")
    raise ExhaustedAttempts("every weak key drawn was degenerate")


def derive_joint_key(own: UserKeyPair, peer_h: int, params: PublicParams) -> JointKey:
    """Diffie-Hellman combination h_ij = peer_h^θ_own mod N."""
    if not 1 < peer_h < params.n:
        raise InvalidParameters("peer public key outside (1, N)")
    h_joint = powmod(peer_h, own.theta, params.n)
    if h_joint == 1:
        raise DegenerateKey("joint key collapsed to 1")
    return JointKey(h_joint=h_joint)


# ---------------------------------------------------------------------------
# Strong-key split
# ---------------------------------------------------------------------------

def split_target(sk: StrongKey, params: PublicParams) -> int:
    """σ mod λN with σ ≡ 0 (mod λ) and σ ≡ 1 (mod N)."""
    if sk.n != params.n:
        raise InvalidParameters("strong key does not belong to these parameters")
    if gcd(sk.lam, params.n) != 1:
        raise InvalidParameters("gcd(λ, N) ≠ 1; the strong key cannot be split")
    return sk.lam * mod_inverse(sk.lam % params.n, params.n) % (sk.lam * params.n)


def split_strong_key(
    sk: StrongKey,
    params: PublicParams,
    rng: random.Random | None = None,
    *,
    first_share: int | None = None,
) -> tuple[PartialStrongKey, PartialStrongKey]:
    """Split λ into λ_i + λ_j ≡ σ (mod λN); λ_i is uniform in [1, λN)."""
    rng = resolve_rng(rng)
    sigma = split_target(sk, params)
    modulus = sk.lam * params.n

    proposal = first_share
    for _ in range(settings.keygen.key_attempts):
        li = proposal if proposal is not None else sample_range(1, modulus - 1, rng)
        proposal = None
        lj = (sigma - li) % modulus
        if li % modulus and lj:
            return (
                PartialStrongKey(share=li, label=ShareLabel.FIRST),
                PartialStrongKey(share=lj, label=ShareLabel.SECOND),
            )
        logger.debug("zero share redrawn")
    raise ExhaustedAttempts("every split drawn had a zero share")
