"""Arithmetic primitives: L-function, safe primes, inverses, hashing, sampling.

All big-integer work goes through gmpy2; every value leaving this module is a
plain ``int``. ``powmod`` and ``mulmod`` report their cost to the active
:class:`ModMulCounter`, if one is installed with :func:`count_modmuls`.
"""

from __future__ import annotations

import logging
import random
import secrets
from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass

import gmpy2
from cryptography.hazmat.primitives import hashes

from restpail.config import settings
from restpail.errors import ExhaustedAttempts, InvalidParameters, NotInvertible, NotUnitResidue
from restpail.models import PublicParams, SafePrime

logger = logging.getLogger(__name__)

_system_rng = secrets.SystemRandom()


def resolve_rng(rng: random.Random | None) -> random.Random:
    """The given source, or the OS CSPRNG."""
    return _system_rng if rng is None else rng


# ---------------------------------------------------------------------------
# Modular multiplication accounting
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class ModMulCounter:
    """Number of modular multiplications performed inside a measured scope."""

    count: int = 0

    def add(self, n: int) -> None:
        if n > 0:
            self.count += n


_active_counter: ContextVar[ModMulCounter | None] = ContextVar("restpail_modmul", default=None)


@contextmanager
def count_modmuls(counter: ModMulCounter | None = None) -> Iterator[ModMulCounter]:
    """Install a counter for the current task; nested scopes shadow outer ones."""
    counter = counter if counter is not None else ModMulCounter()
    token = _active_counter.set(counter)
    try:
        yield counter
    finally:
        _active_counter.reset(token)


def exp_cost(e: int) -> int:
    """Square-and-multiply cost of x^e: one squaring per bit after the first,
    one multiplication per extra set bit."""
    if e <= 0:
        return 0
    return (e.bit_length() - 1) + (e.bit_count() - 1)


def powmod(base: int, e: int, m: int) -> int:
    counter = _active_counter.get()
    if counter is not None:
        counter.add(exp_cost(e))
    return int(gmpy2.powmod(base, e, m))


def mulmod(a: int, b: int, m: int) -> int:
    counter = _active_counter.get()
    if counter is not None:
        counter.count += 1
    return int(gmpy2.f_mod(gmpy2.mpz(a) * b, m))


# ---------------------------------------------------------------------------
# Core functions
# ---------------------------------------------------------------------------

def l_function(u: int, n: int) -> int:
    """L(u) = (u - 1) / N for u ≡ 1 (mod N), 1 <= u < N²."""
    if not 1 <= u < n * n or (u - 1) % n != 0:
        raise NotUnitResidue(f"L-function input is not 1 mod N ({n.bit_length()}-bit N)")
    return (u - 1) // n


def mod_inverse(x: int, m: int) -> int:
    x %= m
    if x == 0:
        raise NotInvertible("zero has no inverse")
    try:
        return int(gmpy2.invert(x, m))
    except ZeroDivisionError:
        raise NotInvertible(
            f"value shares a factor with the {m.bit_length()}-bit modulus"
        ) from None


def gcd(a: int, b: int) -> int:
    return int(gmpy2.gcd(a, b))


def is_probable_prime(x: int, rounds: int | None = None) -> bool:
    return bool(gmpy2.is_prime(x, rounds or settings.keygen.prime_rounds))


def int_to_bytes(x: int) -> bytes:
    """Minimal big-endian magnitude; zero is the empty string."""
    if x < 0:
        raise InvalidParameters("negative integers have no encoding")
    return x.to_bytes((x.bit_length() + 7) // 8, "big")


def _sha256(data: bytes) -> bytes:
    digest = hashes.Hash(hashes.SHA256())
    digest.update(data)
    return digest.finalize()


def hash_to_int(data: bytes, params: PublicParams) -> int:
    """SHA-256 of ``data`` reduced to ⌊|N|/4⌋ bits.

    Widths above 256 bits concatenate SHA-256(data || counter) blocks, the
    counter a 4-byte big-endian integer starting at 0.
    """
    k = params.hash_bits
    if k <= 256:
        return int.from_bytes(_sha256(data), "big") % (1 << k)
    blocks = (k + 255) // 256
    stream = b"".join(_sha256(data + i.to_bytes(4, "big")) for i in range(blocks))
    return int.from_bytes(stream, "big") % (1 << k)


def hash_int(x: int, params: PublicParams) -> int:
    """H(x) for an integer argument, hashed over its minimal big-endian bytes."""
    return hash_to_int(int_to_bytes(x), params)


def sample_range(lo: int, hi: int, rng: random.Random | None = None) -> int:
    """Uniform draw from [lo, hi] by rejection sampling."""
    if lo > hi:
        raise InvalidParameters(f"empty range [{lo}, {hi}]")
    rng = resolve_rng(rng)
    span = hi - lo + 1
    k = span.bit_length()
    while True:
        x = rng.getrandbits(k)
        if x < span:
            return lo + x


# ---------------------------------------------------------------------------
# Safe primes
# ---------------------------------------------------------------------------

def gen_safe_prime(
    bits: int, rng: random.Random | None = None, *, top_two_bits: bool = False
) -> SafePrime:
    """Random safe prime p = 2p' + 1 of exactly ``bits`` bits, with p' odd.

    ``top_two_bits`` also fixes the second-highest bit so a product of two such
    primes has exactly twice the bit length.
    """
    if bits < 3:
        raise InvalidParameters(f"safe primes need at least 3 bits, got {bits}")
    rng = resolve_rng(rng)
    half_bits = bits - 1
    high = 1 << (half_bits - 1)
    if top_two_bits and half_bits >= 2:
        high |= 1 << (half_bits - 2)
    rounds = settings.keygen.prime_rounds

    for attempt in range(1, settings.keygen.prime_attempts + 1):
        p_half = rng.getrandbits(half_bits) | high | 1
        # p' ≡ 2 (mod 3) keeps both p' and p off multiples of 3 at real sizes
        if bits > 8 and p_half % 3 != 2:
            continue
        p = 2 * p_half + 1
        if not (gmpy2.is_prime(p_half, 1) and gmpy2.is_prime(p, 1)):
            continue
        if gmpy2.is_prime(p_half, rounds) and gmpy2.is_prime(p, rounds):
            logger.debug("safe prime of %d bits after %d candidates", bits, attempt)
            return SafePrime(p=p, p_half=p_half)

    raise ExhaustedAttempts(
        f"no {bits}-bit safe prime in {settings.keygen.prime_attempts} candidates"
    )
