"""Unit tests for the additive, multiplicative and mixed ciphertext families."""

import random

import pytest

from restpail.cipher import (
    add_ct_add,
    add_ct_scalar,
    add_dec_partial_1,
    add_dec_partial_2,
    add_dec_strong,
    add_dec_weak,
    add_enc,
    mixed_add_plain,
    mixed_scalar_exp,
    mul_ct_mul,
    mul_dec,
    mul_enc,
    randomness_bound,
)
from restpail.convert import mul_to_mix
from restpail.errors import InvalidParameters, MessageOutOfRange, NotUnitResidue
from restpail.keyring import split_strong_key
from restpail.models import AddCiphertext, MixedCiphertext


def decrypt_all_ways(ks, ct):
    weak = add_dec_weak(ks.params, ks.ui.theta, ct)
    strong = add_dec_strong(ks.params, ks.sk.lam, ct)
    partial = add_dec_partial_2(
        ks.params, ks.second, ct, add_dec_partial_1(ks.params, ks.first, ct)
    )
    return weak, strong, partial


class TestAdditive:
    def test_toy_round_trip(self, toy):
        for m in (0, 1, 2, 1000, toy.params.n - 1):
            ct = add_enc(toy.params, toy.ui.h, m, random.Random(m))
            assert decrypt_all_ways(toy, ct) == (m, m, m)

    def test_forced_randomness(self, toy):
        ct = add_enc(toy.params, toy.ui.h, 42, r=7)
        assert ct.ac2 == pow(toy.params.g, 7, toy.params.n)
        assert ct == add_enc(toy.params, toy.ui.h, 42, r=7)

    def test_randomness_range(self, toy):
        assert randomness_bound(toy.params) == toy.params.n // 4

    def test_message_out_of_range(self, toy):
        with pytest.raises(MessageOutOfRange):
            add_enc(toy.params, toy.ui.h, toy.params.n)
        with pytest.raises(MessageOutOfRange):
            add_enc(toy.params, toy.ui.h, -1)

    def test_wrong_weak_key_fails(self, small):
        ct = add_enc(small.params, small.ui.h, 99, random.Random(0))
        with pytest.raises(NotUnitResidue):
            add_dec_weak(small.params, small.uj.theta, ct)

    def test_strong_key_opens_any_user(self, small):
        ct = add_enc(small.params, small.uj.h, 123456, random.Random(1))
        assert add_dec_strong(small.params, small.sk.lam, ct) == 123456

    def test_same_share_twice(self, toy):
        ct = add_enc(toy.params, toy.ui.h, 5, random.Random(2))
        dc1 = add_dec_partial_1(toy.params, toy.first, ct)
        with pytest.raises(InvalidParameters):
            add_dec_partial_2(toy.params, toy.first, ct, dc1)

    def test_partial_order_does_not_matter(self, toy):
        ct = add_enc(toy.params, toy.ui.h, 77, random.Random(3))
        dc2 = add_dec_partial_1(toy.params, toy.second, ct)
        assert add_dec_partial_2(toy.params, toy.first, ct, dc2) == 77

    def test_shares_from_different_splits(self, small):
        ct = add_enc(small.params, small.ui.h, 55, random.Random(7))
        other_first, _ = split_strong_key(small.sk, small.params, random.Random(99))
        dc1 = add_dec_partial_1(small.params, other_first, ct)
        with pytest.raises(NotUnitResidue):
            add_dec_partial_2(small.params, small.second, ct, dc1)

    def test_non_unit_second_component(self, toy):
        ct = add_enc(toy.params, toy.ui.h, 5, random.Random(8))
        for ac2 in (0, 23, 59 * 4):
            with pytest.raises(NotUnitResidue):
                add_dec_weak(toy.params, toy.ui.theta, AddCiphertext(ac1=ct.ac1, ac2=ac2))

    def test_zero_randomness(self, toy):
        identity = add_enc(toy.params, toy.ui.h, 0, r=0)
        assert identity == AddCiphertext(ac1=1, ac2=1)
        ct = add_enc(toy.params, toy.ui.h, 321, random.Random(9))
        assert add_dec_weak(toy.params, toy.ui.theta, add_ct_add(toy.params, ct, identity)) == 321


class TestModularIdentities:
    def test_binomial(self, small, rng):
        n, n_sq = small.params.n, small.params.n_sq
        assert pow(1 + 2 * 1357, 3, 1357 * 1357) == 8143
        for _ in range(100):
            m, k = rng.randrange(n), rng.randrange(n)
            assert pow(1 + m * n, k, n_sq) == 1 + (m * k % n) * n

    def test_nth_power_depends_on_residue_only(self, small, rng):
        n, n_sq = small.params.n, small.params.n_sq
        for _ in range(100):
            x, k = rng.randrange(1, n), rng.randrange(1, n)
            assert pow(x + k * n, n, n_sq) == pow(x, n, n_sq)

    def test_blinding_shifted_by_multiple_of_n(self, small, rng):
        p, n, n_sq = small.params, small.params.n, small.params.n_sq
        for _ in range(50):
            m, r, k = rng.randrange(n), rng.randrange(1, n // 4), rng.randrange(1, n)
            y = pow(small.ui.h, r, n) + k * n
            ct = AddCiphertext(ac1=pow(y, n, n_sq) * (1 + m * n) % n_sq, ac2=pow(p.g, r, n))
            assert ct == add_enc(p, small.ui.h, m, r=r)
            assert add_dec_weak(p, small.ui.theta, ct) == m


class TestHomomorphisms:
    def test_addition_and_scalar(self, small, rng):
        p, n = small.params, small.params.n
        for _ in range(200):
            m1, m2, k = rng.randrange(n), rng.randrange(n), rng.randrange(n)
            c1 = add_enc(p, small.ui.h, m1, rng)
            c2 = add_enc(p, small.ui.h, m2, rng)
            assert add_dec_weak(p, small.ui.theta, add_ct_add(p, c1, c2)) == (m1 + m2) % n
            assert add_dec_weak(p, small.ui.theta, add_ct_scalar(p, c1, k)) == m1 * k % n

    def test_product(self, small, rng):
        p, n = small.params, small.params.n
        for _ in range(200):
            m1, m2 = rng.randrange(1, n), rng.randrange(1, n)
            c1 = mul_enc(p, small.ui.h, m1, rng)
            c2 = mul_enc(p, small.ui.h, m2, rng)
            assert mul_dec(p, small.ui.theta, mul_ct_mul(p, c1, c2)) == m1 * m2 % n

    def test_wraparound(self, toy):
        p = toy.params
        c1 = add_enc(p, toy.ui.h, 1356, random.Random(10))
        c2 = add_enc(p, toy.ui.h, 2, random.Random(11))
        assert add_dec_weak(p, toy.ui.theta, add_ct_add(p, c1, c2)) == 1
        assert add_dec_strong(p, toy.sk.lam, add_ct_add(p, c1, c2)) == 1

    def test_scalar_out_of_range(self, toy):
        ct = add_enc(toy.params, toy.ui.h, 1, random.Random(0))
        with pytest.raises(MessageOutOfRange):
            add_ct_scalar(toy.params, ct, toy.params.n)


class TestMultiplicative:
    def test_round_trip(self, toy):
        for m in (0, 1, 500, toy.params.n - 1):
            ct = mul_enc(toy.params, toy.ui.h, m, random.Random(m))
            assert mul_dec(toy.params, toy.ui.theta, ct) == m

    def test_components_mod_n(self, small):
        ct = mul_enc(small.params, small.ui.h, 7, random.Random(4))
        assert ct.mc1 < small.params.n
        assert ct.mc2 < small.params.n

    def test_out_of_range(self, toy):
        with pytest.raises(MessageOutOfRange):
            mul_enc(toy.params, toy.ui.h, toy.params.n)


class TestMixed:
    def test_scalar_exp_scales_payload(self, small, rng):
        p = small.params
        mul_ct = mul_enc(p, small.joint.h_joint, 1234, rng)
        mixed = mul_to_mix(p, small.joint, mul_ct, rng)
        blinded = add_dec_strong(p, small.sk.lam, mixed)
        scaled = mixed_scalar_exp(p, mixed, 5)
        assert scaled.c2 == mixed.c2
        assert add_dec_strong(p, small.sk.lam, scaled) == blinded * 5 % p.n

    def test_add_plain(self, small, rng):
        p = small.params
        mixed = mul_to_mix(p, small.joint, mul_enc(p, small.joint.h_joint, 9, rng), rng)
        blinded = add_dec_strong(p, small.sk.lam, mixed)
        shifted = mixed_add_plain(p, mixed, 11)
        assert add_dec_strong(p, small.sk.lam, shifted) == (blinded + 11) % p.n

    def test_scalar_exp_composes(self, small, rng):
        p, n = small.params, small.params.n
        mixed = mul_to_mix(p, small.joint, mul_enc(p, small.joint.h_joint, 77, rng), rng)
        for _ in range(20):
            e1, e2 = rng.randrange(1, n), rng.randrange(1, n)
            if e1 * e2 % n == 0:
                continue
            twice = mixed_scalar_exp(p, mixed_scalar_exp(p, mixed, e1), e2)
            once = mixed_scalar_exp(p, mixed, e1 * e2 % n)
            assert add_dec_strong(p, small.sk.lam, twice) == add_dec_strong(p, small.sk.lam, once)

    def test_add_plain_composes(self, small, rng):
        p, n = small.params, small.params.n
        mixed = mul_to_mix(p, small.joint, mul_enc(p, small.joint.h_joint, 78, rng), rng)
        for _ in range(20):
            x, y = rng.randrange(n), rng.randrange(n)
            twice = mixed_add_plain(p, mixed_add_plain(p, mixed, x), y)
            once = mixed_add_plain(p, mixed, (x + y) % n)
            assert twice == once

    def test_exponent_range(self, toy):
        ct = MixedCiphertext(c1=1, c2=2)
        with pytest.raises(MessageOutOfRange):
            mixed_scalar_exp(toy.params, ct, 0)
        with pytest.raises(MessageOutOfRange):
            mixed_scalar_exp(toy.params, ct, toy.params.n)

    def test_strong_decryption_of_mixed_types(self, toy):
        ct = add_enc(toy.params, toy.ui.h, 3, random.Random(5))
        as_mixed = MixedCiphertext(c1=ct.ac1, c2=ct.ac2)
        assert add_dec_strong(toy.params, toy.sk.lam, as_mixed) == 3


class TestDecryptionPathAgreement:
    @pytest.mark.slow
    def test_512_bits(self, medium, rng):
        for _ in range(200):
            m = rng.randrange(medium.params.n)
            ct = add_enc(medium.params, medium.ui.h, m, rng)
            assert decrypt_all_ways(medium, ct) == (m, m, m)

    def test_256_bits(self, small, rng):
        for _ in range(50):
            m = rng.randrange(small.params.n)
            ct = add_enc(small.params, small.ui.h, m, rng)
            assert decrypt_all_ways(small, ct) == (m, m, m)

    def test_ignores_second_component(self, toy):
        ct = add_enc(toy.params, toy.ui.h, 8, random.Random(6))
        stripped = AddCiphertext(ac1=ct.ac1, ac2=0)
        assert add_dec_strong(toy.params, toy.sk.lam, stripped) == 8
