"""KGC certificate store: an append-only log of KREC frames keyed by identity.

Without a path the store lives in memory (harness, tests). With a path every
insert appends one frame to the file, and opening the store replays it.
"""

from __future__ import annotations

import logging
import threading
from collections.abc import Iterator
from pathlib import Path

from restpail.errors import DuplicateId, StoreFull, UnexpectedTag, UnknownId
from restpail.models import KgcRecord
from restpail.wire import encode, read_frame

logger = logging.getLogger(__name__)


class KgcStore:
    def __init__(self, path: Path | str | None = None):
        self.path = Path(path) if path is not None else None
        self._records: dict[int, KgcRecord] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        buf = self.path.read_bytes()
        offset = 0
        while offset < len(buf):
            record, offset = read_frame(buf, offset)
            if not isinstance(record, KgcRecord):
                raise UnexpectedTag("tag", f"non-KREC frame before byte {offset}")
            if record.id in self._records:
                raise DuplicateId(f"store file repeats identity {record.id}")
            self._records[record.id] = record
        logger.debug("loaded %d KGC records from %s", len(self._records), self.path)

    def insert(self, record: KgcRecord) -> None:
        with self._lock:
            if record.id in self._records:
                raise DuplicateId(f"identity {record.id} already issued")
            if self.path is not None:
                self._append(encode(record))
            self._records[record.id] = record

    def _append(self, frame: bytes) -> None:
        """Append one frame; a failed write leaves the file at its old length."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("ab") as fh:
            start = fh.tell()
            try:
                fh.write(frame)
                fh.flush()
            except OSError:
                fh.truncate(start)
                logger.warning("append to %s failed; truncated to %d bytes", self.path, start)
                raise

    def get(self, identity: int) -> KgcRecord:
        try:
            return self._records[identity]
        except KeyError:
            raise UnknownId(f"no certificate for identity {identity}") from None

    def check_capacity(self, domain: int) -> None:
        """Raise StoreFull once every identity in [1, domain] is taken."""
        if len(self._records) >= domain:
            raise StoreFull(f"all {domain} identities are issued")

    def records(self) -> list[KgcRecord]:
        return list(self._records.values())

    def __contains__(self, identity: object) -> bool:
        return identity in self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[KgcRecord]:
        return iter(self.records())
