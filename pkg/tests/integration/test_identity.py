"""Identity distribution, authentication and private-key recovery."""

import logging
import random

import pytest

from restpail.errors import DuplicateId, UnknownId, VerificationFailed
from restpail.identity_service import (
    auth_verify,
    certificate_nonce,
    kgc_issue,
    kgc_recover,
    recover_private_key,
    register_begin,
    user_recover,
)
from restpail.kgc_store import KgcStore
from restpail.models import Certificate, Verdict
from restpail.numeric import hash_int


def enrol(ks, store, rng):
    secrets_, key, reg = register_begin(ks.params, rng)
    cert = kgc_issue(ks.params, ks.first, store, reg, rng)
    return secrets_, key, cert


class _RacingStore(KgcStore):
    """The first insert loses to a concurrent issue of the same identity."""

    def __init__(self):
        super().__init__()
        self.collisions = 0

    def insert(self, record):
        if self.collisions == 0:
            self.collisions += 1
            raise DuplicateId(f"identity {record.id} already issued")
        super().insert(record)


class TestRegistration:
    def test_user_secrets(self, small, rng):
        secrets_, key, reg = register_begin(small.params, rng, r=1234)
        assert secrets_.theta == key.theta
        assert secrets_.theta_r == key.theta + hash_int(1234, small.params)
        assert reg.reg not in (secrets_.theta, secrets_.theta_r)

    def test_issue_stores_record(self, small, rng):
        store = KgcStore()
        _, _, cert = enrol(small, store, rng)
        record = store.get(cert.id)
        assert record.cert == cert
        assert 1 <= cert.id <= small.params.n_sq // 4

    def test_forced_identity(self, small, rng):
        store = KgcStore()
        _, _, reg = register_begin(small.params, rng)
        cert = kgc_issue(small.params, small.first, store, reg, rng, identity=42)
        assert cert.id == 42
        with pytest.raises(DuplicateId):
            kgc_issue(small.params, small.first, store, reg, rng, identity=42)

    def test_identity_taken_between_check_and_insert(self, small, rng):
        store = _RacingStore()
        _, _, reg = register_begin(small.params, rng)
        cert = kgc_issue(small.params, small.first, store, reg, rng)
        assert store.collisions == 1
        assert [r.id for r in store] == [cert.id]

    def test_forced_identity_lost_to_a_race(self, small, rng):
        _, _, reg = register_begin(small.params, rng)
        with pytest.raises(DuplicateId):
            kgc_issue(small.params, small.first, _RacingStore(), reg, rng, identity=42)

    def test_nonce_is_the_registration_r(self, small, rng):
        store = KgcStore()
        _, _, reg = register_begin(small.params, rng, r=777)
        cert = kgc_issue(small.params, small.first, store, reg, rng)
        assert certificate_nonce(small.params, small.second, cert) == 777


class TestAuthentication:
    def test_issued_certificates_verify(self, small, rng):
        store = KgcStore()
        for _ in range(100):
            _, key, cert = enrol(small, store, rng)
            assert auth_verify(small.params, small.second, key.h, cert.id, cert) is Verdict.ACCEPT

    def test_single_bit_tampering_rejects(self, small, rng):
        store = KgcStore()
        p = small.params
        for trial in range(100):
            _, key, cert = enrol(small, store, rng)
            h = key.h
            target = ("cert1", "cert2", "id", "h")[trial % 4]
            if target == "h":
                h ^= 1 << rng.randrange(h.bit_length())
            else:
                value = getattr(cert, target)
                flipped = value ^ (1 << rng.randrange(value.bit_length()))
                cert = cert.model_copy(update={target: flipped})
            assert auth_verify(p, small.second, h, cert.id, cert) is Verdict.REJECT

    def test_combined_forgery_rejects(self, small, rng):
        store = KgcStore()
        p = small.params
        for _ in range(50):
            _, key_a, cert_a = enrol(small, store, rng)
            _, key_b, cert_b = enrol(small, store, rng)
            forged = Certificate(
                id=cert_a.id + cert_b.id,
                cert1=cert_a.cert1 * cert_b.cert1 % p.n_sq,
                cert2=cert_a.cert2 * cert_b.cert2 % p.n_sq,
            )
            h = key_a.h * key_b.h % p.n
            assert auth_verify(p, small.second, h, forged.id, forged) is Verdict.REJECT

    def test_claimed_identity_must_match(self, small, rng):
        _, key, cert = enrol(small, KgcStore(), rng)
        assert auth_verify(small.params, small.second, key.h, cert.id + 1, cert) is Verdict.REJECT

    def test_out_of_range_values(self, small, rng):
        p = small.params
        _, key, cert = enrol(small, KgcStore(), rng)
        assert auth_verify(p, small.second, 1, cert.id, cert) is Verdict.REJECT
        zeroed = cert.model_copy(update={"cert2": 0})
        assert auth_verify(p, small.second, key.h, cert.id, zeroed) is Verdict.REJECT

    def test_wrong_verification_share(self, small, rng):
        _, key, cert = enrol(small, KgcStore(), rng)
        assert auth_verify(small.params, small.first, key.h, cert.id, cert) is Verdict.REJECT


class TestRecovery:
    def test_recovers_every_theta(self, small, rng):
        store = KgcStore()
        for _ in range(100):
            secrets_, key, cert = enrol(small, store, rng)
            r = kgc_recover(small.params, small.sk, store, cert.id)
            assert user_recover(small.params, secrets_.theta_r, key.h, r) == secrets_.theta

    def test_perturbed_nonce_fails(self, small, rng):
        store = KgcStore()
        for _ in range(100):
            secrets_, key, cert = enrol(small, store, rng)
            r = kgc_recover(small.params, small.sk, store, cert.id)
            with pytest.raises(VerificationFailed):
                user_recover(small.params, secrets_.theta_r, key.h, r + rng.randint(1, 1000))

    def test_unknown_identity(self, small):
        with pytest.raises(UnknownId):
            kgc_recover(small.params, small.sk, KgcStore(), 5)

    def test_retry_until_verified(self, small, caplog):
        rng = random.Random(3)
        store = KgcStore()
        secrets_, key, cert = enrol(small, store, rng)
        honest = kgc_recover(small.params, small.sk, store, cert.id)
        answers = iter([honest + 1, honest])
        with caplog.at_level(logging.WARNING, logger="restpail.identity_service"):
            theta = recover_private_key(
                small.params, small.sk, store, cert.id, secrets_.theta_r, key.h,
                kgc=lambda _ident: next(answers),
            )
        assert theta == secrets_.theta
        assert "retrying" in caplog.text

    def test_gives_up_after_budget(self, small):
        rng = random.Random(4)
        store = KgcStore()
        secrets_, key, cert = enrol(small, store, rng)
        calls = []

        def lying_kgc(ident: int) -> int:
            calls.append(ident)
            return 1

        with pytest.raises(VerificationFailed):
            recover_private_key(
                small.params, small.sk, store, cert.id, secrets_.theta_r, key.h, kgc=lying_kgc
            )
        assert len(calls) == 3

    def test_default_kgc(self, small):
        rng = random.Random(5)
        store = KgcStore()
        secrets_, key, cert = enrol(small, store, rng)
        theta = recover_private_key(
            small.params, small.sk, store, cert.id, secrets_.theta_r, key.h
        )
        assert theta == secrets_.theta
