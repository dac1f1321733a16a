"""Persistent association-list environments.

All runtime binding structures share one representation: an immutable
list of (name, value) pairs.  Lookup scans from the head, so the most
recent binding of a name wins; ``update`` rebinds the nearest occurrence
in place (preserving list shape) and prepends a fresh pair when the name
is unbound.  Updates return new environments, leaving every previously
captured environment intact, which is what lets a method call restore
the caller's variable frame unchanged afterwards.

Wrapped uses:
  * variable frames: name -> value (including this/sender/value)
  * field environments: field -> value (including balance)
  * states: address -> field environment
  * method tables: address -> {method -> (params, body)}
"""

from __future__ import annotations

import json
from typing import Any, Iterator

from .ast import (
    Blockchain,
    MethodDecl,
    Stmt,
    Value,
    stmt_to_source,
    value_from_json,
    value_to_json,
)


class UndefinedNameError(KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(name)

    def __str__(self) -> str:
        return f"undefined name {self.name!r}"


class Env:
    """Immutable association list with nearest-binding update semantics."""

    __slots__ = ("_entries",)

    def __init__(self, entries: tuple[tuple[str, Any], ...] = ()):
        self._entries = entries

    @staticmethod
    def of(pairs) -> "Env":
        return Env(tuple(pairs))

    def lookup(self, name: str) -> Any:
        for key, value in self._entries:
            if key == name:
                return value
        raise UndefinedNameError(name)

    def get(self, name: str, default: Any = None) -> Any:
        for key, value in self._entries:
            if key == name:
                return value
        return default

    def update(self, name: str, value: Any) -> "Env":
        for idx, (key, _) in enumerate(self._entries):
            if key == name:
                entries = list(self._entries)
                entries[idx] = (name, value)
                return Env(tuple(entries))
        return Env(((name, value),) + self._entries)

    def prepend(self, name: str, value: Any) -> "Env":
        """Bind a fresh pair at the head even if the name already occurs."""
        return Env(((name, value),) + self._entries)

    def drop_head(self) -> "Env":
        if not self._entries:
            raise IndexError("empty environment")
        return Env(self._entries[1:])

    def remove_nearest(self, name: str) -> "Env":
        """Drop the nearest binding of ``name`` (used when a scope closes)."""
        for idx, (key, _) in enumerate(self._entries):
            if key == name:
                return Env(self._entries[:idx] + self._entries[idx + 1 :])
        raise UndefinedNameError(name)

    def __contains__(self, name: str) -> bool:
        return any(key == name for key, _ in self._entries)

    def __iter__(self) -> Iterator[tuple[str, Any]]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Env) and self._entries == other._entries

    def __hash__(self) -> int:
        return hash(self._entries)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self._entries)
        return f"Env({inner})"

    def keys(self) -> list[str]:
        return [k for k, _ in self._entries]

    def items(self) -> tuple[tuple[str, Any], ...]:
        return self._entries


def env_update(env: Env, name: str, value: Any) -> Env:
    return env.update(name, value)


def env_lookup(env: Env, name: str) -> Any:
    return env.lookup(name)


# Type aliases documenting the roles; structurally all are Env.
VarEnv = Env
FieldEnv = Env
State = Env
MethodEnv = Env
MethodTable = Env


def make_state(pairs: dict[str, dict[str, Value]]) -> State:
    return Env.of((addr, Env.of(tuple(fields.items()))) for addr, fields in pairs.items())


# ---------------------------------------------------------------------------
# JSON round-trips (canonical form: objects with sorted keys)
# ---------------------------------------------------------------------------


def state_to_json(state: State) -> dict:
    return {addr: {name: value_to_json(v) for name, v in fields} for addr, fields in state}


def state_from_json(doc: dict) -> State:
    return Env.of(
        (addr, Env.of((name, value_from_json(v)) for name, v in fields.items())) for addr, fields in doc.items()
    )


def var_env_to_json(venv: VarEnv) -> list:
    # Variable frames keep binding order (shadowing matters), so they
    # serialize as a pair list rather than an object.
    return [[name, value_to_json(v)] for name, v in venv]


def method_table_to_json(mtable: MethodTable) -> dict:
    out: dict[str, dict] = {}
    for addr, menv in mtable:
        out[addr] = {
            name: {"params": list(params), "body": stmt_to_source(body)} for name, (params, body) in menv
        }
    return out


def method_table_from_json(doc: dict) -> MethodTable:
    from .parser import parse_statement

    table = []
    for addr, methods in doc.items():
        menv = []
        for name, m in methods.items():
            body: Stmt = parse_statement(m["body"])
            menv.append((name, (tuple(m["params"]), body)))
        table.append((addr, Env.of(menv)))
    return Env.of(table)


def method_table_of(chain: Blockchain) -> dict[str, dict[str, MethodDecl]]:
    return {c.address: {m.name: m for m in c.methods} for c in chain.contracts}


def dumps_canonical(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2)
