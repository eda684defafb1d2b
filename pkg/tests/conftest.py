"""Shared fixtures: parameter sets at three sizes and seeded randomness."""

import random

import pytest

from restpail.errors import DegenerateKey
from restpail.keyring import derive_joint_key, gen_params, gen_user_key, split_strong_key
from restpail.models import JointKey, PartialStrongKey, PublicParams, StrongKey, UserKeyPair


class KeySet:
    """Parameters, strong key, a split and two users with their joint key."""

    def __init__(self, params: PublicParams, sk: StrongKey, seed: int):
        rng = random.Random(seed)
        self.params = params
        self.sk = sk
        self.first, self.second = split_strong_key(sk, params, rng)
        while True:
            self.ui: UserKeyPair = gen_user_key(params, rng)
            self.uj: UserKeyPair = gen_user_key(params, rng)
            try:
                self.joint: JointKey = derive_joint_key(self.ui, self.uj.h, params)
            except DegenerateKey:
                continue  # toy group: theta_i * theta_j hit a multiple of the order
            break

    @property
    def shares(self) -> tuple[PartialStrongKey, PartialStrongKey]:
        return self.first, self.second


@pytest.fixture(scope="session")
def toy() -> KeySet:
    """N = 23 * 59 = 1357."""
    params, sk = gen_params(11, random.Random(1), primes=(23, 59))
    return KeySet(params, sk, 2)


@pytest.fixture(scope="session")
def small() -> KeySet:
    params, sk = gen_params(256, random.Random(256))
    return KeySet(params, sk, 3)


@pytest.fixture(scope="session")
def medium() -> KeySet:
    params, sk = gen_params(512, random.Random(512))
    return KeySet(params, sk, 4)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240601)
