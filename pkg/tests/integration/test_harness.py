"""In-process protocol harness: message flows, determinism and failure attribution."""

import pytest
from pydantic import BaseModel

from restpail.errors import (
    InvalidParameters,
    MessageOutOfRange,
    ProtocolStepError,
    VerificationFailed,
)
from restpail.harness import PROTOCOLS, harness_run
from restpail.kgc_store import KgcStore
from restpail.models import Verdict
from restpail.wire import decode


def _ints(value) -> set[int]:
    """Every integer inside a message, nested models included."""
    if isinstance(value, BaseModel):
        return set().union(*(_ints(getattr(value, f)) for f in type(value).model_fields))
    if isinstance(value, int):
        return {int(value)}
    return set()


class TestFlows:
    async def test_multomix(self, small):
        t = await harness_run("multomix", small.params, small.sk, seed=1, m=99)
        assert [e.tag for e in t.messages] == ["MULC"]
        assert "mixed" in t.outputs

    async def test_mixtoadd(self, small):
        t = await harness_run("mixtoadd", small.params, small.sk, seed=1, m=4321)
        assert [e.tag for e in t.messages] == ["MIX1", "MIX2"]
        assert [e.tag for e in t.entries if e.setup] == ["MULC", "MIXC"]
        assert t.outputs["plaintext"] == 4321

    async def test_accs(self, small):
        t = await harness_run("accs", small.params, small.sk, seed=1, secret=7, b=2, c=3)
        assert [e.tag for e in t.messages] == ["ACCA", "ACCB"]
        assert [(e.tag, e.setup) for e in t.entries][0] == ("CSEC", True)
        assert t.outputs["result"] == 17

    async def test_register(self, small):
        store = KgcStore()
        t = await harness_run("register", small.params, small.sk, seed=1, store=store)
        assert [(e.tag, e.sender, e.receiver) for e in t.messages] == [
            ("REG ", "U_i", "KGC"),
            ("CERT", "KGC", "U_i"),
        ]
        assert t.outputs["cert"].id in store

    async def test_auth(self, small):
        t = await harness_run("auth", small.params, small.sk, seed=1)
        assert [e.tag for e in t.messages] == ["AUTQ", "AUTH"]
        assert [e.tag for e in t.entries if e.setup] == ["REG ", "CERT"]
        assert t.outputs["verdict"] is Verdict.ACCEPT

    async def test_auth_with_wallet(self, small):
        store = KgcStore()
        reg = await harness_run("register", small.params, small.sk, seed=2, store=store)
        wallet = (reg.outputs["secrets"], reg.outputs["key"], reg.outputs["cert"])
        t = await harness_run("auth", small.params, small.sk, seed=2, wallet=wallet)
        assert t.outputs["verdict"] is Verdict.ACCEPT
        assert not any(e.setup for e in t.entries)

    async def test_auth_rejects_tampered_wallet(self, small):
        store = KgcStore()
        reg = await harness_run("register", small.params, small.sk, seed=3, store=store)
        cert = reg.outputs["cert"]
        bad = cert.model_copy(update={"cert1": cert.cert1 ^ 1})
        wallet = (reg.outputs["secrets"], reg.outputs["key"], bad)
        t = await harness_run("auth", small.params, small.sk, seed=3, wallet=wallet)
        assert t.outputs["verdict"] is Verdict.REJECT

    async def test_recover(self, small):
        t = await harness_run("recover", small.params, small.sk, seed=1)
        assert t.entries[0].setup
        assert [e.tag for e in t.messages] == ["RECQ", "RECR"]
        assert t.outputs["rounds"] == 1

    async def test_recover_matches_wallet(self, small):
        store = KgcStore()
        reg = await harness_run("register", small.params, small.sk, seed=4, store=store)
        wallet = (reg.outputs["secrets"], reg.outputs["key"], reg.outputs["cert"])
        t = await harness_run("recover", small.params, small.sk, seed=4, store=store, wallet=wallet)
        assert t.outputs["theta"] == reg.outputs["secrets"].theta

    async def test_recover_retries_a_bad_answer(self, small):
        t = await harness_run(
            "recover", small.params, small.sk, seed=5,
            answer_filter=lambda rnd, r: r + 1 if rnd == 1 else r,
        )
        assert t.outputs["rounds"] == 2
        assert [e.tag for e in t.messages] == ["RECQ", "RECR", "RECQ", "RECR"]

    async def test_recover_gives_up(self, small):
        with pytest.raises(ProtocolStepError) as exc:
            await harness_run(
                "recover", small.params, small.sk, seed=6, answer_filter=lambda rnd, r: r + 1
            )
        assert exc.value.step == "recover.step3"
        assert isinstance(exc.value.cause, VerificationFailed)


class TestTranscripts:
    async def test_same_seed_same_bytes(self):
        first = await harness_run("accs", seed=5, bits=64)
        second = await harness_run("accs", seed=5, bits=64)
        assert first.frames() == second.frames()
        assert first.n_bits == 64

    async def test_different_seed_differs(self, small):
        first = await harness_run("mixtoadd", small.params, small.sk, seed=1)
        second = await harness_run("mixtoadd", small.params, small.sk, seed=2)
        assert first.frames() != second.frames()

    async def test_unseeded_runs_draw_fresh_keys(self, small):
        store = KgcStore()
        first = await harness_run("register", small.params, small.sk, seed=None, store=store)
        second = await harness_run("register", small.params, small.sk, seed=None, store=store)
        assert first.seed is None
        assert first.outputs["secrets"].theta != second.outputs["secrets"].theta
        assert first.frames() != second.frames()

    async def test_unseeded_fresh_parameters(self):
        first = await harness_run("accs", seed=None, bits=64)
        second = await harness_run("accs", seed=None, bits=64)
        assert first.outputs["result"] == second.outputs["result"] == 17
        assert first.frames() != second.frames()

    async def test_frames_decode_to_recorded_messages(self, small):
        for protocol in PROTOCOLS:
            t = await harness_run(protocol, small.params, small.sk, seed=7)
            for entry in t.entries:
                assert decode(bytes.fromhex(entry.frame)) == entry.message

    async def test_kgc_never_sees_user_keys(self, small):
        store = KgcStore()
        reg = await harness_run("register", small.params, small.sk, seed=8, store=store)
        secrets_ = reg.outputs["secrets"]
        wallet = (secrets_, reg.outputs["key"], reg.outputs["cert"])
        rec = await harness_run("recover", small.params, small.sk, seed=8, store=store,
                                wallet=wallet)
        auth = await harness_run("auth", small.params, small.sk, seed=8, wallet=wallet)
        for t in (reg, rec, auth):
            for entry in t.entries:
                assert not _ints(entry.message) & {secrets_.theta, secrets_.theta_r}


class TestFailures:
    async def test_unknown_protocol(self):
        with pytest.raises(InvalidParameters):
            await harness_run("nope")

    async def test_params_without_key(self, small):
        with pytest.raises(InvalidParameters):
            await harness_run("accs", small.params)

    async def test_step_is_named(self, small):
        with pytest.raises(ProtocolStepError) as exc:
            await harness_run("accs", small.params, small.sk, seed=1, b=0)
        assert exc.value.step == "accs.step1"
        assert isinstance(exc.value.cause, MessageOutOfRange)
