"""Audit service: append-only record of what the KGC and the harness did.

Events carry identities, sizes and verdicts only. Keys, weak keys and
recovered values never reach the log.
"""

from __future__ import annotations

import logging
from typing import Any

import aiosqlite

from restpail.database import from_json, to_json
from restpail.models import AuditAction, AuditEvent

logger = logging.getLogger(__name__)

_COLUMNS = ("event_id", "action", "actor_id", "target_id", "target_type", "details", "timestamp")
_INSERT = (
    f"INSERT INTO audit_events ({', '.join(_COLUMNS)}) "
    f"VALUES ({', '.join('?' for _ in _COLUMNS)})"
)

# Field names that only ever hold key material.
SECRET_FIELDS = frozenset({"theta", "theta_r", "lam", "lam_i", "lam_j", "sigma", "p", "q"})


def _scrub(details: dict[str, Any] | None) -> dict[str, Any]:
    clean = dict(details or {})
    leaked = SECRET_FIELDS.intersection(clean)
    for name in leaked:
        del clean[name]
    if leaked:
        logger.warning("dropped secret fields from audit details: %s", sorted(leaked))
    return clean


async def log_event(
    db: aiosqlite.Connection,
    action: AuditAction,
    actor_id: str = "",
    target_id: str = "",
    target_type: str = "",
    details: dict[str, Any] | None = None,
) -> AuditEvent:
    """Append one event. Secret-named detail fields are dropped first."""
    event = AuditEvent(
        action=action,
        actor_id=actor_id,
        target_id=target_id,
        target_type=target_type,
        details=_scrub(details),
    )
    record = event.model_dump(mode="json")
    record["details"] = to_json(event.details)
    await db.execute(_INSERT, tuple(record[col] for col in _COLUMNS))
    await db.commit()
    return event


async def _select(
    db: aiosqlite.Connection, where: dict[str, str], limit: int
) -> list[dict[str, Any]]:
    clause = " AND ".join(f"{col} = ?" for col in where)
    sql = "SELECT * FROM audit_events"
    if clause:
        sql += f" WHERE {clause}"
    sql += " ORDER BY timestamp DESC LIMIT ?"
    async with db.execute(sql, (*where.values(), limit)) as cursor:
        found = await cursor.fetchall()
    events = []
    for row in found:
        event = dict(row)
        event["details"] = from_json(event.get("details"))
        events.append(event)
    return events


async def get_events_for_target(
    db: aiosqlite.Connection,
    target_id: str,
    limit: int = 100,
) -> list[dict[str, Any]]:
    """Audit events for one certificate identity or protocol run."""
    return await _select(db, {"target_id": target_id}, limit)


async def get_recent_events(
    db: aiosqlite.Connection,
    action: AuditAction | None = None,
    limit: int = 50,
) -> list[dict[str, Any]]:
    return await _select(db, {"action": action.value} if action else {}, limit)
