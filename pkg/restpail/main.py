"""Command-line entry point.

Usage:
    restpail keygen --bits 1024 --out keys.txt
    restpail split-key --keys keys.txt --out shares.txt
    restpail user-keygen --keys keys.txt --out alice.txt
    restpail encrypt --keys keys.txt --keys alice.txt --mode add --m 42
    restpail decrypt --keys keys.txt --keys alice.txt --key weak --ct <hex>
    restpail run register --keys keys.txt --keys shares.txt --store kgc.bin --out wallet.txt
    restpail run auth --keys keys.txt --keys shares.txt --wallet wallet.txt
    restpail bench --sizes 512,768,1024 --iters 1000 --csv bench.csv

Key files hold one hex wire frame per line; ``--keys`` may be repeated and
commands pick the frames they need by tag. Exit codes: 0 success, 1 usage,
2 cryptographic failure or rejection, 3 I/O or malformed frame.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import random
import sys
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from restpail import __version__
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
from restpail.errors import RestPailError, UnexpectedTag
from restpail.keyring import gen_params, gen_user_key, split_strong_key
from restpail.kgc_store import KgcStore
from restpail.models import (
    AddCiphertext,
    AuditAction,
    Certificate,
    MulCiphertext,
    PartialStrongKey,
    PublicParams,
    ShareLabel,
    StrongKey,
    Transcript,
    UserKeyPair,
    UserSecrets,
    Verdict,
)
from restpail.wire import decode_hex, encode_hex, tag_of

logger = logging.getLogger("restpail")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CRYPTO = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on bad usage instead of 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_csv(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text}")


# ---------------------------------------------------------------------------
# Key bags and output
# ---------------------------------------------------------------------------

def load_bag(paths: list[Path] | None) -> list[BaseModel]:
    """Every frame in every key file, in order."""
    frames: list[BaseModel] = []
    for path in paths or []:
        for line in Path(path).read_text().splitlines():
            if line.strip() and not line.lstrip().startswith("#"):
                frames.append(decode_hex(line))
    return frames


def pick(bag: list[BaseModel], cls: type[BaseModel], label: ShareLabel | None = None) -> BaseModel:
    for frame in bag:
        if isinstance(frame, cls) and (label is None or frame.label == label):
            return frame
    wanted = tag_of(cls) + (f" ({label.name.lower()})" if label else "")
    raise UnexpectedTag("tag", f"no {wanted} frame in the key files")


def _rng(seed: int | None) -> random.Random | None:
    return random.Random(seed) if seed is not None else None


def _write_frames(frames: list[BaseModel], out: Path | None) -> None:
    text = "".join(encode_hex(f) + "\n" for f in frames)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
        print(f"wrote {len(frames)} frames to {out}", file=sys.stderr)


def _print_table(rows: list[dict[str, Any]]) -> None:
    if not rows:
        return
    columns = list(rows[0])
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in columns}
    print("  ".join(c.ljust(widths[c]) for c in columns))
    for row in rows:
        print("  ".join(str(row[c]).ljust(widths[c]) for c in columns))


def _show_frames(frames: list[BaseModel], fmt: str) -> None:
    if fmt == "hex":
        for frame in frames:
            print(encode_hex(frame))
    else:
        _print_table([{"tag": tag_of(f), **_flat(f)} for f in frames])


def _flat(model: BaseModel) -> dict[str, Any]:
    return model.model_dump(mode="json")


def _show_transcript(transcript: Transcript, fmt: str) -> None:
    if fmt == "hex":
        for entry in transcript.entries:
            print(entry.frame)
    else:
        _print_table(
            [
                {
                    "step": e.step,
                    "from": e.sender,
                    "to": e.receiver,
                    "tag": e.tag,
                    "bytes": e.size,
                    "setup": "yes" if e.setup else "",
                }
                for e in transcript.entries
            ]
        )
    for key, value in transcript.outputs.items():
        if isinstance(value, BaseModel):
            value = encode_hex(value) if fmt == "hex" else json.dumps(_flat(value))
        elif isinstance(value, Verdict):
            value = value.value
        print(f"{key}={value}")


def _store(args: argparse.Namespace, required: bool = True) -> KgcStore:
    path = args.store or settings.store.path
    if path is None:
        if required:
            raise UsageError("no KGC store: pass --store or set RESTPAIL_STORE")
        return KgcStore()
    return KgcStore(path)


async def _audit(args: argparse.Namespace, action: AuditAction, **fields: Any) -> None:
    if args.audit_db is None:
        return
    from restpail.audit_service import log_event
    from restpail.database import get_db

    db = await get_db(args.audit_db)
    try:
        await log_event(db, action, **fields)
    finally:
        await db.close()


async def _run_harness(args: argparse.Namespace, protocol: str, **inputs: Any) -> Transcript:
    from restpail.harness import harness_run

    bag = load_bag(args.keys)
    params, sk = pick(bag, PublicParams), pick(bag, StrongKey)
    shares = None
    if any(isinstance(f, PartialStrongKey) for f in bag):
        shares = (
            pick(bag, PartialStrongKey, ShareLabel.FIRST),
            pick(bag, PartialStrongKey, ShareLabel.SECOND),
        )
    store = inputs.pop("store", None)
    db = None
    if args.audit_db is not None:
        from restpail.database import get_db

        db = await get_db(args.audit_db)
    try:
        return await harness_run(
            protocol, params, sk, seed=args.seed, store=store, shares=shares, db=db, **inputs
        )
    finally:
        if db is not None:
            await db.close()


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_keygen(args: argparse.Namespace) -> int:
    params, sk = gen_params(args.bits, _rng(args.seed))
    _write_frames([params, sk], args.out)
    asyncio.run(
        _audit(args, AuditAction.PARAMS_GENERATED, actor_id="kgc", target_type="params",
               details={"bits": params.bits})
    )
    return EXIT_OK


def cmd_split_key(args: argparse.Namespace) -> int:
    bag = load_bag(args.keys)
    first, second = split_strong_key(pick(bag, StrongKey), pick(bag, PublicParams), _rng(args.seed))
    _write_frames([first, second], args.out)
    asyncio.run(_audit(args, AuditAction.KEY_SPLIT, actor_id="kgc", target_type="params"))
    return EXIT_OK


def cmd_user_keygen(args: argparse.Namespace) -> int:
    key = gen_user_key(pick(load_bag(args.keys), PublicParams), _rng(args.seed))
    _write_frames([key], args.out)
    return EXIT_OK


def cmd_encrypt(args: argparse.Namespace) -> int:
    bag = load_bag(args.keys)
    params = pick(bag, PublicParams)
    h = args.h if args.h is not None else pick(bag, UserKeyPair).h
    enc = add_enc if args.mode == "add" else mul_enc
    _show_frames([enc(params, h, args.m, _rng(args.seed))], args.format)
    return EXIT_OK


def cmd_decrypt(args: argparse.Namespace) -> int:
    bag = load_bag(args.keys)
    params = pick(bag, PublicParams)
    ct = decode_hex(args.ct)
    if args.key == "weak":
        theta = pick(bag, UserKeyPair).theta
        if isinstance(ct, MulCiphertext):
            m = mul_dec(params, theta, ct)
        elif isinstance(ct, AddCiphertext):
            m = add_dec_weak(params, theta, ct)
        else:
            raise UnexpectedTag("tag", f"weak keys decrypt ADDC or MULC, not {tag_of(ct)}")
    elif args.key == "strong":
        m = add_dec_strong(params, pick(bag, StrongKey).lam, ct)
    else:
        first = pick(bag, PartialStrongKey, ShareLabel.FIRST)
        second = pick(bag, PartialStrongKey, ShareLabel.SECOND)
        m = add_dec_partial_2(params, second, ct, add_dec_partial_1(params, first, ct))
    print(m)
    return EXIT_OK


def cmd_convert(args: argparse.Namespace) -> int:
    transcript = asyncio.run(_run_harness(args, args.direction, m=args.m))
    _show_transcript(transcript, args.format)
    return EXIT_OK


def _load_wallet(path: Path) -> tuple[UserSecrets, UserKeyPair, Certificate]:
    bag = load_bag([path])
    return pick(bag, UserSecrets), pick(bag, UserKeyPair), pick(bag, Certificate)


def cmd_run(args: argparse.Namespace) -> int:
    if args.protocol == "accs":
        transcript = asyncio.run(
            _run_harness(args, "accs", secret=args.secret, b=args.b, c=args.c)
        )
        _show_transcript(transcript, args.format)
        return EXIT_OK

    if args.protocol == "register":
        if args.out is None:
            raise UsageError("run register needs --out WALLET")
        transcript = asyncio.run(_run_harness(args, "register", store=_store(args)))
        out = transcript.outputs
        _write_frames([out["secrets"], out["key"], out["cert"]], args.out)
        _show_transcript(transcript.model_copy(update={"outputs": {"id": out["cert"].id}}),
                         args.format)
        return EXIT_OK

    if args.wallet is None:
        raise UsageError(f"run {args.protocol} needs --wallet WALLET")
    wallet = _load_wallet(args.wallet)

    if args.protocol == "auth":
        transcript = asyncio.run(_run_harness(args, "auth", wallet=wallet))
        _show_transcript(transcript, args.format)
        return EXIT_OK if transcript.outputs["verdict"] is Verdict.ACCEPT else EXIT_CRYPTO

    transcript = asyncio.run(_run_harness(args, "recover", wallet=wallet, store=_store(args)))
    recovered = transcript.outputs["theta"] == wallet[0].theta
    summary = {"rounds": transcript.outputs["rounds"], "matches_wallet": recovered}
    _show_transcript(transcript.model_copy(update={"outputs": summary}), args.format)
    return EXIT_OK if recovered else EXIT_CRYPTO


def cmd_bench(args: argparse.Namespace) -> int:
    from restpail import bench

    if args.comm:
        rows = asyncio.run(bench.communication_costs(args.sizes, seed=args.seed))
        columns = bench.COMM_COLUMNS
    elif args.protocols:
        rows = bench.bench_protocols(args.sizes, args.iters, seed=args.seed)
        columns = bench.PROTOCOL_COLUMNS
    else:
        rows = bench.bench_run(
            args.sizes,
            args.iters,
            seed=args.seed,
            include_conversions=args.conversions,
            include_baseline=args.baseline,
        )
        columns = bench.BENCH_COLUMNS
    if args.csv is not None:
        bench.write_csv(rows, args.csv, columns)
    if args.format == "table" or args.csv is None:
        _print_table([{c: getattr(r, c) for c in columns} for r in rows])
    return EXIT_OK


def cmd_store(args: argparse.Namespace) -> int:
    if args.action == "audit":
        return asyncio.run(_store_audit(args))
    store = _store(args)
    if args.action == "list":
        rows = [{"id": r.id, "id_bits": r.id.bit_length()} for r in store.records()]
        if args.format == "hex":
            for r in store.records():
                print(r.id)
        else:
            _print_table(rows)
        return EXIT_OK
    if args.id is None:
        raise UsageError("store show needs an ID")
    _show_frames([store.get(args.id)], args.format)
    return EXIT_OK


async def _store_audit(args: argparse.Namespace) -> int:
    from restpail.audit_service import get_recent_events
    from restpail.database import get_db

    db = await get_db(args.audit_db)
    try:
        events = await get_recent_events(db, limit=args.limit)
    finally:
        await db.close()
    _print_table(
        [
            {
                "time": e["timestamp"],
                "action": e["action"],
                "actor": e["actor_id"],
                "target": e["target_id"],
                "details": json.dumps(e["details"], sort_keys=True),
            }
            for e in events
        ]
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="restpail",
        description="Restrained-Paillier toolkit: dual-key homomorphic encryption and protocols",
    )
    parser.add_argument("--version", action="version", version=f"restpail {__version__}")
    parser.add_argument("--format", choices=["hex", "table"], default="hex")
    parser.add_argument("--store", type=Path, default=None, help="KGC store file ($RESTPAIL_STORE)")
    parser.add_argument("--audit-db", type=Path, default=None, help="append audit events here")
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def keyed(p: argparse.ArgumentParser) -> None:
        p.add_argument("--keys", type=Path, action="append", required=True)
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("keygen", help="generate (N, g) and the strong key")
    p.add_argument("--bits", type=int, default=settings.keygen.default_bits)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("split-key", help="split the strong key into two shares")
    keyed(p)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_split_key)

    p = sub.add_parser("user-keygen", help="draw a weak key pair")
    keyed(p)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_user_keygen)

    p = sub.add_parser("encrypt", help="additive or multiplicative encryption")
    keyed(p)
    p.add_argument("--mode", choices=["add", "mul"], default="add")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--h", type=int, default=None, help="public key (default: UKEY in --keys)")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="decrypt a hex ciphertext frame")
    keyed(p)
    p.add_argument("--key", choices=["weak", "strong", "partial"], required=True)
    p.add_argument("--ct", required=True)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("convert", help="run a conversion between two fresh users")
    keyed(p)
    p.add_argument("direction", choices=["multomix", "mixtoadd"])
    p.add_argument("--m", type=int, default=1)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("run", help="run a protocol in-process")
    keyed(p)
    p.add_argument("protocol", choices=["accs", "register", "auth", "recover"])
    p.add_argument("--secret", type=int, default=7)
    p.add_argument("--b", type=int, default=2)
    p.add_argument("--c", type=int, default=3)
    p.add_argument("--out", type=Path, default=None, help="wallet written by register")
    p.add_argument("--wallet", type=Path, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="time the algorithms")
    p.add_argument("--sizes", type=_int_csv, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--csv", type=Path, default=None)
    p.add_argument("--conversions", action="store_true", help="add MulToMix and MixToAdd rows")
    p.add_argument("--baseline", action="store_true", help="add modified Paillier rows")
    p.add_argument("--protocols", action="store_true", help="per-role protocol costs")
    p.add_argument("--comm", action="store_true", help="protocol message sizes")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("store", help="inspect the KGC store and audit trail")
    p.add_argument("action", choices=["list", "show", "audit"])
    p.add_argument("id", type=int, nargs="?")
    p.add_argument("--limit", type=int, default=50)
    p.set_defaults(func=cmd_store)

    return parser


def _configure_logging(verbose: bool) -> None:
    level = getattr(logging, settings.log_level.upper(), logging.WARNING)
    if verbose:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    _configure_logging(args.verbose)
    if args.command == "store" and args.action == "audit" and args.audit_db is None:
        settings.ensure_dirs()
        args.audit_db = settings.audit_db_path

    try:
        return args.func(args)
    except UsageError as exc:
        print(f"restpail: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RestPailError as exc:
        print(f"restpail: {exc.code}: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"restpail: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
