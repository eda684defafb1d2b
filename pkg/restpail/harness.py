"""In-process protocol harness.

Each party runs as an asyncio task with its own inbox. Every message crosses
the wire codec: the sender's value is encoded, the frame is recorded in the
transcript, and the receiver gets the decoded copy. Randomness is one
``random.Random`` per role, seeded from the session seed and the role name, so
a fixed seed replays a byte-identical transcript. A session without a seed
draws every role from the OS CSPRNG.
"""

from __future__ import annotations

import asyncio
import logging
import random
from collections.abc import Awaitable, Callable, Iterator
from contextlib import contextmanager
from typing import Any

import aiosqlite
from pydantic import BaseModel

from restpail import accs_service, identity_service
from restpail.audit_service import log_event
from restpail.cipher import add_dec_strong, mul_enc
from restpail.config import settings
from restpail.convert import mix_to_add_step1, mix_to_add_step2, mix_to_add_step3, mul_to_mix
from restpail.errors import (
    InvalidParameters,
    ProtocolStepError,
    UnexpectedTag,
    VerificationFailed,
)
from restpail.keyring import derive_joint_key, gen_params, gen_user_key, split_strong_key
from restpail.kgc_store import KgcStore
from restpail.models import (
    AccsMsgA,
    AccsMsgB,
    AuditAction,
    AuthRequest,
    AuthResponse,
    Certificate,
    MixToAddMsg1,
    MixToAddMsg2,
    MulCiphertext,
    PartialStrongKey,
    PublicParams,
    RecoveryRequest,
    RecoveryResponse,
    RegistrationRequest,
    StrongKey,
    Transcript,
    TranscriptEntry,
    UserKeyPair,
    UserSecrets,
    Verdict,
)
from restpail.numeric import resolve_rng
from restpail.wire import decode, encode, tag_of

logger = logging.getLogger(__name__)

PROTOCOLS = ("multomix", "mixtoadd", "accs", "register", "auth", "recover")

U_I = "U_i"
U_J = "U_j"
KGC = "KGC"


@contextmanager
def step(name: str) -> Iterator[None]:
    """Attribute any failure inside the block to protocol step ``name``."""
    try:
        yield
    except ProtocolStepError:
        raise
    except Exception as exc:
        raise ProtocolStepError(name, exc) from exc


class Session:
    """Message plumbing and bookkeeping for one protocol run."""

    def __init__(
        self,
        protocol: str,
        params: PublicParams,
        sk: StrongKey,
        seed: int | str | None,
        store: KgcStore,
        db: aiosqlite.Connection | None,
    ):
        self.protocol = protocol
        self.params = params
        self.sk = sk
        self.seed = seed
        self.store = store
        self.db = db
        self.shares: tuple[PartialStrongKey, PartialStrongKey] | None = None
        self.entries: list[TranscriptEntry] = []
        self.outputs: dict[str, Any] = {}
        self._inboxes: dict[str, asyncio.Queue] = {}
        self._rngs: dict[str, random.Random] = {}

    def rng(self, role: str) -> random.Random:
        if self.seed is None:
            return resolve_rng(None)
        if role not in self._rngs:
            self._rngs[role] = random.Random(f"{self.seed}:{role}")
        return self._rngs[role]

    def inbox(self, role: str) -> asyncio.Queue:
        return self._inboxes.setdefault(role, asyncio.Queue())

    def _record(
        self, step_name: str, sender: str, receiver: str, value: BaseModel, setup: bool
    ) -> bytes:
        frame = encode(value)
        self.entries.append(
            TranscriptEntry(
                step=step_name,
                sender=sender,
                receiver=receiver,
                tag=tag_of(value),
                frame=frame.hex(),
                message=value,
                setup=setup,
            )
        )
        return frame

    def record_setup(self, step_name: str, sender: str, receiver: str, value: BaseModel) -> None:
        self._record(step_name, sender, receiver, value, setup=True)

    async def send(self, step_name: str, sender: str, receiver: str, value: BaseModel) -> None:
        frame = self._record(step_name, sender, receiver, value, setup=False)
        await self.inbox(receiver).put(decode(frame))

    async def close(self, receiver: str) -> None:
        """Tell a serving role that no further requests follow."""
        await self.inbox(receiver).put(None)

    async def recv(self, role: str, expect: type[BaseModel]) -> BaseModel | None:
        value = await self.inbox(role).get()
        if value is not None and not isinstance(value, expect):
            raise UnexpectedTag("tag", f"{role} wanted {tag_of(expect)}, got {tag_of(value)}")
        return value

    async def audit(
        self,
        action: AuditAction,
        actor: str,
        target_id: str = "",
        target_type: str = "",
        **details: Any,
    ) -> None:
        if self.db is not None:
            await log_event(self.db, action, actor, target_id, target_type, details)

    def transcript(self) -> Transcript:
        return Transcript(
            protocol=self.protocol,
            n_bits=self.params.bits,
            seed=self.seed,
            entries=list(self.entries),
            outputs=dict(self.outputs),
        )


async def run_roles(roles: dict[str, Awaitable[None]]) -> None:
    """Run role coroutines concurrently; the first failure cancels the rest."""
    tasks = [asyncio.create_task(coro, name=role) for role, coro in roles.items()]
    done, pending = await asyncio.wait(tasks, return_when=asyncio.FIRST_EXCEPTION)
    for task in pending:
        task.cancel()
    await asyncio.gather(*pending, return_exceptions=True)
    for task in tasks:
        if task in done and not task.cancelled() and task.exception() is not None:
            raise task.exception()


# ---------------------------------------------------------------------------
# Shared setup
# ---------------------------------------------------------------------------

def _user_pair(s: Session):
    ui = gen_user_key(s.params, s.rng(U_I))
    uj = gen_user_key(s.params, s.rng(U_J))
    joint = derive_joint_key(ui, uj.h, s.params)
    if joint != derive_joint_key(uj, ui.h, s.params):
        raise InvalidParameters("joint keys disagree")
    return ui, uj, joint


def _kgc_shares(s: Session) -> tuple[PartialStrongKey, PartialStrongKey]:
    """The KGC's (sigk, verk) pair, split once per session unless handed in."""
    if s.shares is None:
        s.shares = split_strong_key(s.sk, s.params, s.rng("split"))
    return s.shares


async def _register(s: Session, *, setup: bool) -> tuple[UserSecrets, UserKeyPair, Certificate]:
    """Registration with the KGC; recorded as setup when it only prepares another flow."""
    sigk, _ = _kgc_shares(s)
    with step("register.step1"):
        secrets_, key, reg = identity_service.register_begin(s.params, s.rng(U_I))
    if setup:
        s.record_setup("register.step1", U_I, KGC, reg)
        with step("register.step2"):
            cert = identity_service.kgc_issue(s.params, sigk, s.store, reg, s.rng(KGC))
        s.record_setup("register.step2", KGC, U_I, cert)
        await s.audit(AuditAction.CERTIFICATE_ISSUED, KGC, str(cert.id), "certificate",
                      id_bits=cert.id.bit_length())
        return secrets_, key, cert

    received: dict[str, Certificate] = {}

    async def user() -> None:
        await s.send("register.step1", U_I, KGC, reg)
        received["cert"] = await s.recv(U_I, Certificate)

    async def kgc() -> None:
        request = await s.recv(KGC, RegistrationRequest)
        with step("register.step2"):
            cert = identity_service.kgc_issue(s.params, sigk, s.store, request, s.rng(KGC))
        await s.audit(AuditAction.CERTIFICATE_ISSUED, KGC, str(cert.id), "certificate",
                      id_bits=cert.id.bit_length())
        await s.send("register.step2", KGC, U_I, cert)

    await run_roles({U_I: user(), KGC: kgc()})
    return secrets_, key, received["cert"]


# ---------------------------------------------------------------------------
# Flows
# ---------------------------------------------------------------------------

async def _flow_multomix(s: Session, m: int = 1, **_: Any) -> None:
    ui, uj, joint = _user_pair(s)

    async def u_j() -> None:
        with step("multomix.step1"):
            ct = mul_enc(s.params, joint.h_joint, m, s.rng(U_J))
        await s.send("multomix.step1", U_J, U_I, ct)

    async def u_i() -> None:
        ct = await s.recv(U_I, MulCiphertext)
        with step("multomix.step2"):
            s.outputs["mixed"] = mul_to_mix(s.params, joint, ct, s.rng(U_I))

    await run_roles({U_J: u_j(), U_I: u_i()})


async def _flow_mixtoadd(s: Session, m: int = 1, **_: Any) -> None:
    ui, uj, joint = _user_pair(s)
    with step("mixtoadd.setup"):
        mul_ct = mul_enc(s.params, joint.h_joint, m, s.rng(U_J))
        mixed = mul_to_mix(s.params, joint, mul_ct, s.rng(U_I))
    s.record_setup("mixtoadd.setup", U_J, U_I, mul_ct)
    s.record_setup("mixtoadd.setup", U_I, U_J, mixed)

    async def u_j() -> None:
        with step("mixtoadd.step1"):
            msg1 = mix_to_add_step1(s.params, uj.theta, mixed, s.rng(U_J))
        await s.send("mixtoadd.step1", U_J, U_I, msg1)
        msg2 = await s.recv(U_J, MixToAddMsg2)
        with step("mixtoadd.step3"):
            converted = mix_to_add_step3(s.params, uj.theta, msg2)
        s.outputs["converted"] = converted
        s.outputs["plaintext"] = add_dec_strong(s.params, s.sk.lam, converted)

    async def u_i() -> None:
        msg1 = await s.recv(U_I, MixToAddMsg1)
        with step("mixtoadd.step2"):
            msg2 = mix_to_add_step2(s.params, ui.theta, msg1)
        await s.send("mixtoadd.step2", U_I, U_J, msg2)

    await run_roles({U_J: u_j(), U_I: u_i()})


async def _flow_accs(
    s: Session,
    secret: int = 7,
    b: int = 2,
    c: int = 3,
    a: int | None = None,
    d: int | None = None,
    **_: Any,
) -> None:
    ui, uj, joint = _user_pair(s)
    # the common-secret shares are dealt apart from the KGC's signing split
    lambda_i, lambda_j = split_strong_key(s.sk, s.params, s.rng("dealer"))
    with step("accs.setup"):
        ct = accs_service.accs_encrypt_secret(s.params, joint, secret, s.rng("owner"))
    s.record_setup("accs.setup", "owner", U_I, ct)

    async def u_j() -> None:
        with step("accs.step1"):
            msg_a, state = accs_service.accs_step1(
                s.params, joint, uj.theta, lambda_j, b, ct, s.rng(U_J), a=a, d=d
            )
        await s.send("accs.step1", U_J, U_I, msg_a)
        msg_b = await s.recv(U_J, AccsMsgB)
        with step("accs.step3"):
            s.outputs["result"] = accs_service.accs_step3(s.params, state, msg_b)

    async def u_i() -> None:
        msg_a = await s.recv(U_I, AccsMsgA)
        with step("accs.step2"):
            msg_b = accs_service.accs_step2(s.params, ui.theta, lambda_i, c, msg_a)
        await s.send("accs.step2", U_I, U_J, msg_b)

    await run_roles({U_J: u_j(), U_I: u_i()})


async def _flow_register(s: Session, **_: Any) -> None:
    secrets_, key, cert = await _register(s, setup=False)
    s.outputs.update(secrets=secrets_, key=key, cert=cert)


async def _flow_auth(
    s: Session,
    wallet: tuple[UserSecrets, UserKeyPair, Certificate] | None = None,
    **_: Any,
) -> None:
    if wallet is None:
        wallet = await _register(s, setup=True)
    _, key, cert = wallet
    _, verk = _kgc_shares(s)

    async def u_j() -> None:
        await s.send("auth.step1", U_J, U_I, AuthRequest())
        response = await s.recv(U_J, AuthResponse)
        with step("auth.step3"):
            verdict = identity_service.auth_verify(
                s.params, verk, response.h, response.cert.id, response.cert
            )
        s.outputs["verdict"] = verdict
        action = (
            AuditAction.IDENTITY_VERIFIED
            if verdict is Verdict.ACCEPT
            else AuditAction.IDENTITY_REJECTED
        )
        await s.audit(action, U_J, str(response.cert.id), "certificate")

    async def u_i() -> None:
        await s.recv(U_I, AuthRequest)
        await s.send("auth.step2", U_I, U_J, AuthResponse(h=key.h, cert=cert))

    await run_roles({U_J: u_j(), U_I: u_i()})


async def _flow_recover(
    s: Session,
    wallet: tuple[UserSecrets, UserKeyPair, Certificate] | None = None,
    answer_filter: Callable[[int, int], int] | None = None,
    **_: Any,
) -> None:
    """``answer_filter(round, r)`` lets tests corrupt the KGC's answer per round."""
    if wallet is None:
        wallet = await _register(s, setup=True)
    secrets_, key, cert = wallet
    attempts = settings.protocol.recovery_attempts

    async def user() -> None:
        for rnd in range(1, attempts + 1):
            await s.send("recover.step1", U_I, KGC, RecoveryRequest(id=cert.id))
            response = await s.recv(U_I, RecoveryResponse)
            try:
                with step("recover.step3"):
                    theta = identity_service.user_recover(
                        s.params, secrets_.theta_r, key.h, response.r
                    )
            except ProtocolStepError as exc:
                if not isinstance(exc.cause, VerificationFailed) or rnd == attempts:
                    await s.close(KGC)
                    raise
                logger.warning("recovery check failed (round %d of %d), retrying", rnd, attempts)
                await s.audit(AuditAction.RECOVERY_RETRY, U_I, str(cert.id), "certificate",
                              round=rnd)
                continue
            s.outputs.update(theta=theta, rounds=rnd)
            await s.close(KGC)
            return

    async def kgc() -> None:
        rnd = 0
        while (request := await s.recv(KGC, RecoveryRequest)) is not None:
            rnd += 1
            with step("recover.step2"):
                r = identity_service.kgc_recover(s.params, s.sk, s.store, request.id)
            if answer_filter is not None:
                r = answer_filter(rnd, r)
            await s.audit(AuditAction.RECOVERY_SERVED, KGC, str(request.id), "certificate",
                          round=rnd)
            await s.send("recover.step2", KGC, U_I, RecoveryResponse(r=r))

    await run_roles({U_I: user(), KGC: kgc()})


_FLOWS: dict[str, Callable[..., Awaitable[None]]] = {
    "multomix": _flow_multomix,
    "mixtoadd": _flow_mixtoadd,
    "accs": _flow_accs,
    "register": _flow_register,
    "auth": _flow_auth,
    "recover": _flow_recover,
}


async def harness_run(
    protocol: str,
    params: PublicParams | None = None,
    sk: StrongKey | None = None,
    *,
    seed: int | str | None = 0,
    bits: int = 64,
    store: KgcStore | None = None,
    shares: tuple[PartialStrongKey, PartialStrongKey] | None = None,
    db: aiosqlite.Connection | None = None,
    **inputs: Any,
) -> Transcript:
    """Run ``protocol`` end to end and return its transcript.

    Without ``params``/``sk`` a fresh ``bits``-sized parameter set is drawn
    from the seed; ``seed=None`` uses the OS CSPRNG throughout. Flow inputs
    (``m``, ``secret``, ``b``, ``c``, ``wallet``...) pass through ``inputs``.
    """
    flow = _FLOWS.get(protocol)
    if flow is None:
        choices = ", ".join(PROTOCOLS)
        raise InvalidParameters(f"unknown protocol {protocol!r}; choose from {choices}")
    if (params is None) != (sk is None):
        raise InvalidParameters("params and sk go together")
    if params is None:
        params, sk = gen_params(bits, None if seed is None else random.Random(f"{seed}:params"))

    session = Session(protocol, params, sk, seed, store if store is not None else KgcStore(), db)
    session.shares = shares
    await flow(session, **inputs)
    transcript = session.transcript()
    await session.audit(
        AuditAction.PROTOCOL_COMPLETED,
        "harness",
        protocol,
        "protocol",
        n_bits=params.bits,
        messages=len(transcript.messages),
        bytes=sum(e.size for e in transcript.messages),
    )
    logger.debug("%s finished with %d messages", protocol, len(transcript.messages))
    return transcript

