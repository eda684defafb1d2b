"""Benchmarks: per-algorithm timing, modular-multiplication counts, protocol costs.

Absolute milliseconds depend on the machine; what carries over is the shape:
MulEnc is the cheapest algorithm, a partial decryption costs about twice a
strong one, and every mean grows with |N|. The algorithm table follows the usual
length conventions for cost accounting: |r| = |N|/4 for encryption and |θ| = |N|.
The optional baseline rows time the modified Paillier scheme (T1 = g^r,
T2 = h^r(1 + mN), both mod N²) under the same conventions.
"""

from __future__ import annotations

import csv
import logging
import random
import time
from collections.abc import Callable, Iterable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TextIO

from pydantic import BaseModel

from restpail import accs_service, identity_service
from restpail.cipher import (
    add_dec_partial_1,
    add_dec_partial_2,
    add_dec_strong,
    add_dec_weak,
    add_enc,
    mul_dec,
    mul_enc,
)
from restpail.config import settings
from restpail.convert import (
    mix_to_add,
    mix_to_add_step1,
    mix_to_add_step2,
    mix_to_add_step3,
    mul_to_mix,
)
from restpail.errors import InvalidParameters
from restpail.harness import harness_run
from restpail.keyring import derive_joint_key, gen_params, gen_user_key, split_strong_key
from restpail.kgc_store import KgcStore
from restpail.models import BenchRow, CommCostRow, ProtocolCostRow, PublicParams, StrongKey
from restpail.numeric import (
    ModMulCounter,
    count_modmuls,
    gcd,
    l_function,
    mod_inverse,
    mulmod,
    powmod,
    resolve_rng,
)

logger = logging.getLogger(__name__)

ALGORITHMS = (
    "AddEnc",
    "AddDecSkey",
    "AddDecWkey",
    "AddDecPSkey1",
    "AddDecPSkey2",
    "MulEnc",
    "MulDec",
)
CONVERSIONS = ("MulToMix", "MixToAdd")
BASELINE = ("PaillierEnc", "PaillierDecSkey", "PaillierDecWkey")

BENCH_COLUMNS = ("algorithm", "n_bits", "iterations", "mean_ms", "modmul_count")
PROTOCOL_COLUMNS = ("protocol", "role", "n_bits", "iterations", "mean_ms", "modmul_count")
COMM_COLUMNS = ("protocol", "n_bits", "messages", "bytes")

# Application protocols whose message sizes are compared, mapped to harness flows
COMM_PROTOCOLS = {
    "IdDis&KeyMan": "register",
    "IdAuth": "auth",
    "PriKeyRec": "recover",
    "ACCS": "accs",
}


def check_sizes(sizes: Iterable[int]) -> list[int]:
    sizes = list(sizes)
    bad = [s for s in sizes if s not in settings.bench.allowed_sizes]
    if bad:
        allowed = ", ".join(str(s) for s in sorted(settings.bench.allowed_sizes))
        raise InvalidParameters(f"unsupported |N| {bad}; allowed: {allowed}")
    return sizes


def _seeded(seed: int | str | None, label: str) -> random.Random:
    return resolve_rng(None) if seed is None else random.Random(f"{seed}:{label}")


def bench_params(size: int, seed: int | str | None = 0) -> tuple[PublicParams, StrongKey]:
    return gen_params(size, _seeded(seed, f"bench:{size}"))


def _check_iters(iters: int | None) -> int:
    if iters is None:
        return settings.bench.iterations
    if iters < 1:
        raise InvalidParameters("iterations must be at least 1")
    return iters


def _exact_bits(k: int, rng: random.Random) -> int:
    k = max(k, 1)
    return rng.getrandbits(k) | (1 << (k - 1))


def _short_r(params: PublicParams, rng: random.Random) -> int:
    """Encryption randomness of exactly |N|/4 bits."""
    return _exact_bits(params.bits // 4, rng)


def _measure(fn: Callable[[Any], Any], inputs: Sequence[Any], warmup: int) -> tuple[float, int]:
    """Mean wall time in ms and mean modmul count over ``inputs``."""
    for x in inputs[:warmup]:
        fn(x)
    counter = ModMulCounter()
    with count_modmuls(counter):
        start = time.perf_counter()
        for x in inputs:
            fn(x)
        elapsed = time.perf_counter() - start
    n = len(inputs)
    return elapsed * 1000.0 / n, round(counter.count / n)


# ---------------------------------------------------------------------------
# Algorithm table
# ---------------------------------------------------------------------------

def _algorithm_cases(
    params: PublicParams, sk: StrongKey, iters: int, rng: random.Random
) -> dict[str, tuple[Callable[[Any], Any], list[Any]]]:
    user = gen_user_key(params, rng, theta=_exact_bits(params.bits, rng))
    first, second = split_strong_key(sk, params, rng)
    n = params.n

    messages = [rng.randrange(n) for _ in range(iters)]
    rs = [_short_r(params, rng) for _ in range(iters)]
    add_cts = [add_enc(params, user.h, m, r=r) for m, r in zip(messages, rs)]
    mul_cts = [mul_enc(params, user.h, m, r=r) for m, r in zip(messages, rs)]
    partials = [add_dec_partial_1(params, first, ct) for ct in add_cts]

    return {
        "AddEnc": (lambda x: add_enc(params, user.h, x[0], r=x[1]), list(zip(messages, rs))),
        "AddDecSkey": (lambda ct: add_dec_strong(params, sk.lam, ct), add_cts),
        "AddDecWkey": (lambda ct: add_dec_weak(params, user.theta, ct), add_cts),
        "AddDecPSkey1": (lambda ct: add_dec_partial_1(params, first, ct), add_cts),
        "AddDecPSkey2": (
            lambda x: add_dec_partial_2(params, second, x[0], x[1]),
            list(zip(add_cts, partials)),
        ),
        "MulEnc": (lambda x: mul_enc(params, user.h, x[0], r=x[1]), list(zip(messages, rs))),
        "MulDec": (lambda ct: mul_dec(params, user.theta, ct), mul_cts),
    }


def _conversion_cases(
    params: PublicParams, iters: int, rng: random.Random
) -> dict[str, tuple[Callable[[Any], Any], list[Any]]]:
    ui = gen_user_key(params, rng)
    uj = gen_user_key(params, rng)
    joint = derive_joint_key(ui, uj.h, params)
    mul_cts = [mul_enc(params, joint.h_joint, rng.randrange(params.n), rng) for _ in range(iters)]
    mixed = [mul_to_mix(params, joint, ct, rng) for ct in mul_cts]
    return {
        "MulToMix": (lambda ct: mul_to_mix(params, joint, ct, rng), mul_cts),
        "MixToAdd": (lambda ct: mix_to_add(params, ui.theta, uj.theta, ct, rng), mixed),
    }


def _baseline_base(params: PublicParams, rng: random.Random) -> int:
    """g = -a^(2N) mod N², whose order divides λ modulo N²."""
    while True:
        a = rng.randrange(2, params.n_sq)
        if gcd(a, params.n) == 1:
            return params.n_sq - powmod(a, 2 * params.n, params.n_sq)


def _baseline_cases(
    params: PublicParams, sk: StrongKey, iters: int, rng: random.Random
) -> dict[str, tuple[Callable[[Any], Any], list[Any]]]:
    n, n_sq = params.n, params.n_sq
    g = _baseline_base(params, rng)
    theta = _exact_bits(params.bits, rng)
    h = powmod(g, theta, n_sq)
    lam_inv = mod_inverse(sk.lam, n)

    def enc(x: tuple[int, int]) -> tuple[int, int]:
        m, r = x
        return powmod(g, r, n_sq), mulmod(powmod(h, r, n_sq), 1 + m * n, n_sq)

    def dec_weak(ct: tuple[int, int]) -> int:
        t1, t2 = ct
        return l_function(mulmod(t2, mod_inverse(powmod(t1, theta, n_sq), n_sq), n_sq), n)

    def dec_strong(ct: tuple[int, int]) -> int:
        return mulmod(l_function(powmod(ct[1], sk.lam, n_sq), n), lam_inv, n)

    inputs = [(rng.randrange(n), _short_r(params, rng)) for _ in range(iters)]
    cts = [enc(x) for x in inputs]
    return {
        "PaillierEnc": (enc, inputs),
        "PaillierDecSkey": (dec_strong, cts),
        "PaillierDecWkey": (dec_weak, cts),
    }


def bench_run(
    sizes: Iterable[int] | None = None,
    iters: int | None = None,
    *,
    warmup: int | None = None,
    seed: int | str | None = 0,
    include_conversions: bool = False,
    include_baseline: bool = False,
) -> list[BenchRow]:
    """Time every algorithm at every size; rows come out size-major.

    ``seed=None`` draws parameters and inputs from the OS CSPRNG.
    """
    sizes = check_sizes(sizes if sizes is not None else settings.bench.sizes)
    iters = _check_iters(iters)
    warmup = settings.bench.warmup if warmup is None else warmup

    rows: list[BenchRow] = []
    for size in sizes:
        params, sk = bench_params(size, seed)
        rng = _seeded(seed, f"inputs:{size}")
        cases = _algorithm_cases(params, sk, iters, rng)
        if include_conversions:
            cases.update(_conversion_cases(params, iters, rng))
        if include_baseline:
            cases.update(_baseline_cases(params, sk, iters, rng))
        for name, (fn, inputs) in cases.items():
            mean_ms, count = _measure(fn, inputs, warmup)
            rows.append(
                BenchRow(
                    algorithm=name,
                    n_bits=size,
                    mean_ms=mean_ms,
                    modmul_count=count,
                    iterations=iters,
                )
            )
        logger.info("benchmarked %d algorithms at %d bits", len(cases), size)
    return rows


# ---------------------------------------------------------------------------
# Per-role protocol costs
# ---------------------------------------------------------------------------

@dataclass
class _RoleMeter:
    """Accumulates time and modmuls per role across iterations."""

    seconds: dict[str, float] = field(default_factory=dict)
    modmuls: dict[str, int] = field(default_factory=dict)

    @contextmanager
    def role(self, name: str) -> Iterator[None]:
        counter = ModMulCounter()
        with count_modmuls(counter):
            start = time.perf_counter()
            yield
            elapsed = time.perf_counter() - start
        self.seconds[name] = self.seconds.get(name, 0.0) + elapsed
        self.modmuls[name] = self.modmuls.get(name, 0) + counter.count


def _protocol_rounds(
    params: PublicParams, sk: StrongKey, rng: random.Random
) -> dict[str, Callable[[_RoleMeter], None]]:
    ui = gen_user_key(params, rng)
    uj = gen_user_key(params, rng)
    joint = derive_joint_key(ui, uj.h, params)
    sigk, verk = split_strong_key(sk, params, rng)
    lambda_i, lambda_j = split_strong_key(sk, params, rng)
    store = KgcStore()
    factor = accs_service.factor_bound(params)

    enrolled_secrets, enrolled_key, reg = identity_service.register_begin(params, rng)
    enrolled = identity_service.kgc_issue(params, sigk, store, reg, rng)

    def iddis(meter: _RoleMeter) -> None:
        with meter.role("U_i"):
            _, _, request = identity_service.register_begin(params, rng)
        with meter.role("KGC"):
            identity_service.kgc_issue(params, sigk, store, request, rng)

    def idauth(meter: _RoleMeter) -> None:
        with meter.role("U_j"):
            identity_service.auth_verify(params, verk, enrolled_key.h, enrolled.id, enrolled)

    def prikeyrec(meter: _RoleMeter) -> None:
        with meter.role("KGC"):
            r = identity_service.kgc_recover(params, sk, store, enrolled.id)
        with meter.role("U_i"):
            identity_service.user_recover(params, enrolled_secrets.theta_r, enrolled_key.h, r)

    def accs(meter: _RoleMeter) -> None:
        ct = accs_service.accs_encrypt_secret(params, joint, rng.randrange(params.n), rng)
        b, c = rng.randint(1, factor), rng.randint(1, factor)
        with meter.role("U_j"):
            msg_a, state = accs_service.accs_step1(params, joint, uj.theta, lambda_j, b, ct, rng)
        with meter.role("U_i"):
            msg_b = accs_service.accs_step2(params, ui.theta, lambda_i, c, msg_a)
        with meter.role("U_j"):
            accs_service.accs_step3(params, state, msg_b)

    def multomix(meter: _RoleMeter) -> None:
        with meter.role("U_j"):
            ct = mul_enc(params, joint.h_joint, rng.randrange(params.n), rng)
        with meter.role("U_i"):
            mul_to_mix(params, joint, ct, rng)

    def mixtoadd(meter: _RoleMeter) -> None:
        mixed = mul_to_mix(
            params, joint, mul_enc(params, joint.h_joint, rng.randrange(params.n), rng), rng
        )
        with meter.role("U_j"):
            msg1 = mix_to_add_step1(params, uj.theta, mixed, rng)
        with meter.role("U_i"):
            msg2 = mix_to_add_step2(params, ui.theta, msg1)
        with meter.role("U_j"):
            mix_to_add_step3(params, uj.theta, msg2)

    return {
        "IdDis&KeyMan": iddis,
        "IdAuth": idauth,
        "PriKeyRec": prikeyrec,
        "ACCS": accs,
        "MultoMix": multomix,
        "MixtoAdd": mixtoadd,
    }


def bench_protocols(
    sizes: Iterable[int] | None = None,
    iters: int | None = None,
    *,
    seed: int | str | None = 0,
) -> list[ProtocolCostRow]:
    """Per-role mean time and modmul count for every protocol."""
    sizes = check_sizes(sizes if sizes is not None else settings.bench.sizes)
    iters = _check_iters(iters)

    rows: list[ProtocolCostRow] = []
    for size in sizes:
        params, sk = bench_params(size, seed)
        rng = _seeded(seed, f"protocols:{size}")
        for protocol, run_once in _protocol_rounds(params, sk, rng).items():
            meter = _RoleMeter()
            for _ in range(iters):
                run_once(meter)
            for role in sorted(meter.seconds):
                rows.append(
                    ProtocolCostRow(
                        protocol=protocol,
                        role=role,
                        n_bits=size,
                        iterations=iters,
                        mean_ms=meter.seconds[role] * 1000.0 / iters,
                        modmul_count=round(meter.modmuls[role] / iters),
                    )
                )
    return rows


async def communication_costs(
    sizes: Iterable[int] | None = None,
    *,
    seed: int | str | None = 0,
) -> list[CommCostRow]:
    """Encoded message bytes per application protocol, setup frames excluded."""
    sizes = check_sizes(sizes if sizes is not None else settings.bench.sizes)
    rows: list[CommCostRow] = []
    for size in sizes:
        params, sk = bench_params(size, seed)
        for name, flow in COMM_PROTOCOLS.items():
            transcript = await harness_run(flow, params, sk, seed=seed)
            messages = transcript.messages
            rows.append(
                CommCostRow(
                    protocol=name,
                    n_bits=size,
                    messages=len(messages),
                    bytes=sum(e.size for e in messages),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def write_csv(
    rows: Sequence[BaseModel],
    out: Path | str | TextIO,
    columns: Sequence[str] = BENCH_COLUMNS,
) -> None:
    if isinstance(out, str | Path):
        with Path(out).open("w", newline="") as fh:
            write_csv(rows, fh, columns)
        return
    writer = csv.DictWriter(out, fieldnames=list(columns), extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row})


def read_csv(path: Path | str, model: type[BaseModel] = BenchRow) -> list[BaseModel]:
    with Path(path).open(newline="") as fh:
        return [model.model_validate(record) for record in csv.DictReader(fh)]
