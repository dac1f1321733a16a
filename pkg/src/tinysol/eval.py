"""Big-step interpreter with fuel, traces, and total outcomes.

Every execution ends in exactly one of four outcomes: ``Ok`` (a final
state and variable frame), ``Thrown`` (a throw was reached; throw has no
transition rule, so nothing commits), ``Stuck`` (a lookup, guard, arity,
kind, or balance premise failed, with the reason recorded), or
``OutOfFuel`` (the fuel counter hit zero; one unit is consumed per
statement-rule application, so divergent programs always land here).
Each outcome carries the call trace accumulated so far.

The interpreter runs on an explicit work stack rather than host
recursion, so deeply nested reentrant calls are bounded by fuel alone.

Call statements are the only trace-producing construct.  A call record
is emitted at the moment the call fires — after its balance and arity
premises succeed, before the body runs — so an aborted body still shows
the call that entered it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .ast import (
    Addr,
    Assign,
    Blockchain,
    Bool,
    Call,
    ContractDecl,
    DeclVar,
    Expr,
    FieldRead,
    If,
    Lit,
    Magic,
    Nat,
    Op,
    Seq,
    Skip,
    Stmt,
    Throw,
    Transaction,
    Value,
    VarTarget,
    Var,
    While,
    value_to_json,
)
from .env import Env, MethodTable, State, UndefinedNameError, VarEnv

DEFAULT_FUEL = 10**6

BALANCE = "balance"


class StuckReason(enum.Enum):
    UNDEFINED_NAME = "undefined-name"
    TYPE_MISMATCH = "type-mismatch"
    NON_BOOLEAN_GUARD = "non-boolean-guard"
    ARITY_MISMATCH = "arity-mismatch"
    INSUFFICIENT_BALANCE = "insufficient-balance"


class StuckError(Exception):
    def __init__(self, reason: StuckReason, detail: str):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason.value}: {detail}")


@dataclass(frozen=True)
class CallRecord:
    caller: str
    callee: str
    method: str
    args: tuple[Value, ...]
    amount: int

    def __str__(self) -> str:
        args = ", ".join(_show_value(v) for v in self.args)
        return f"{self.caller}->{self.callee}.{self.method}({args}):{self.amount}"

    def to_json(self) -> dict:
        return {
            "caller": self.caller,
            "callee": self.callee,
            "method": self.method,
            "args": [value_to_json(v) for v in self.args],
            "amount": self.amount,
        }


Trace = tuple[CallRecord, ...]


def _show_value(v: Value) -> str:
    if isinstance(v, Nat):
        return str(v.n)
    if isinstance(v, Bool):
        return "true" if v.b else "false"
    return v.name


class OutcomeKind(enum.Enum):
    OK = "ok"
    THROWN = "thrown"
    STUCK = "stuck"
    OUT_OF_FUEL = "out-of-fuel"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    state: State
    var_env: VarEnv
    trace: Trace
    reason: StuckReason | None = None
    detail: str | None = None

    @property
    def ok(self) -> bool:
        return self.kind is OutcomeKind.OK

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind.value, "trace": [r.to_json() for r in self.trace]}
        if self.reason is not None:
            doc["reason"] = self.reason.value
        if self.detail is not None:
            doc["detail"] = self.detail
        return doc


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


def eval_expr(state: State, venv: VarEnv, expr: Expr) -> Value:
    """Evaluate a (side-effect free) expression; raises StuckError."""
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, (Var, Magic)):
        try:
            return venv.lookup(expr.name)
        except UndefinedNameError:
            raise StuckError(StuckReason.UNDEFINED_NAME, f"variable {expr.name!r}") from None
    if isinstance(expr, FieldRead):
        target = eval_expr(state, venv, expr.target)
        if not isinstance(target, Addr):
            raise StuckError(StuckReason.TYPE_MISMATCH, f"field read on non-address {_show_value(target)}")
        try:
            fields = state.lookup(target.name)
        except UndefinedNameError:
            raise StuckError(StuckReason.UNDEFINED_NAME, f"address {target.name!r}") from None
        try:
            return fields.lookup(expr.fieldname)
        except UndefinedNameError:
            raise StuckError(
                StuckReason.UNDEFINED_NAME, f"field {expr.fieldname!r} of {target.name}"
            ) from None
    if isinstance(expr, Op):
        args = [eval_expr(state, venv, a) for a in expr.args]
        return _apply_op(expr.op, args)
    raise TypeError(f"not an expression: {expr!r}")


def _apply_op(op: str, args: list[Value]) -> Value:
    if op in ("=", "!="):
        if len(args) != 2:
            raise StuckError(StuckReason.TYPE_MISMATCH, f"{op} expects two arguments")
        eq = _value_eq(args[0], args[1])
        return Bool(eq if op == "=" else not eq)
    if op == "!":
        if len(args) != 1 or not isinstance(args[0], Bool):
            raise StuckError(StuckReason.TYPE_MISMATCH, "! expects one boolean")
        return Bool(not args[0].b)
    if op in ("&&", "||"):
        if len(args) != 2 or not all(isinstance(a, Bool) for a in args):
            raise StuckError(StuckReason.TYPE_MISMATCH, f"{op} expects two booleans")
        a, b = args[0].b, args[1].b
        return Bool(a and b if op == "&&" else a or b)
    if op in ("+", "-", "*", "<", "<=", ">", ">="):
        if len(args) != 2 or not all(isinstance(a, Nat) for a in args):
            raise StuckError(StuckReason.TYPE_MISMATCH, f"{op} expects two naturals")
        a, b = args[0].n, args[1].n
        if op == "+":
            return Nat(a + b)
        if op == "-":
            return Nat(max(0, a - b))  # truncated subtraction keeps naturals closed
        if op == "*":
            return Nat(a * b)
        if op == "<":
            return Bool(a < b)
        if op == "<=":
            return Bool(a <= b)
        if op == ">":
            return Bool(a > b)
        return Bool(a >= b)
    raise StuckError(StuckReason.TYPE_MISMATCH, f"unknown operator {op!r}")


def _value_eq(a: Value, b: Value) -> bool:
    # Heterogeneous comparisons are total: values of different kinds differ.
    if isinstance(a, Nat) and isinstance(b, Nat):
        return a.n == b.n
    if isinstance(a, Bool) and isinstance(b, Bool):
        return a.b == b.b
    if isinstance(a, Addr) and isinstance(b, Addr):
        return a.name == b.name
    return False


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------

# Work items: ("stmt", s) runs a statement; ("restore_venv", env) reinstates
# the caller's frame after a call body; ("pop_var", name) closes a var scope.


def exec_stmt(mtable: MethodTable, state: State, venv: VarEnv, stmt: Stmt, fuel: int = DEFAULT_FUEL) -> Outcome:
    trace: list[CallRecord] = []
    work: list[tuple] = [("stmt", stmt)]

    def abort(kind: OutcomeKind, reason: StuckReason | None = None, detail: str | None = None) -> Outcome:
        return Outcome(kind, state, venv, tuple(trace), reason, detail)

    while work:
        tag, *payload = work.pop()
        if tag == "restore_venv":
            venv = payload[0]
            continue
        if tag == "pop_var":
            venv = venv.remove_nearest(payload[0])
            continue

        s: Stmt = payload[0]
        if fuel <= 0:
            return abort(OutcomeKind.OUT_OF_FUEL)
        fuel -= 1

        try:
            if isinstance(s, Skip):
                continue
            if isinstance(s, Throw):
                return abort(OutcomeKind.THROWN)
            if isinstance(s, Seq):
                work.append(("stmt", s.second))
                work.append(("stmt", s.first))
                continue
            if isinstance(s, Assign):
                v = eval_expr(state, venv, s.expr)
                if isinstance(s.lvalue, VarTarget):
                    venv = venv.update(s.lvalue.name, v)
                else:
                    this = _this_address(venv)
                    fields = _lookup_fields(state, this)
                    if s.lvalue.name not in fields:
                        raise StuckError(StuckReason.UNDEFINED_NAME, f"field {s.lvalue.name!r} of {this}")
                    state = state.update(this, fields.update(s.lvalue.name, v))
                continue
            if isinstance(s, If):
                guard = eval_expr(state, venv, s.guard)
                if not isinstance(guard, Bool):
                    raise StuckError(StuckReason.NON_BOOLEAN_GUARD, f"if guard is {_show_value(guard)}")
                work.append(("stmt", s.then_branch if guard.b else s.else_branch))
                continue
            if isinstance(s, While):
                guard = eval_expr(state, venv, s.guard)
                if not isinstance(guard, Bool):
                    raise StuckError(StuckReason.NON_BOOLEAN_GUARD, f"while guard is {_show_value(guard)}")
                if guard.b:
                    work.append(("stmt", s))  # re-test after the body
                    work.append(("stmt", s.body))
                continue
            if isinstance(s, DeclVar):
                v = eval_expr(state, venv, s.init)
                venv = venv.prepend(s.name, v)
                work.append(("pop_var", s.name))
                work.append(("stmt", s.body))
                continue
            if isinstance(s, Call):
                state, venv = _enter_call(mtable, state, venv, s, trace, work)
                continue
        except StuckError as err:
            return abort(OutcomeKind.STUCK, err.reason, err.detail)
        raise TypeError(f"not a statement: {s!r}")

    return Outcome(OutcomeKind.OK, state, venv, tuple(trace))


def _this_address(venv: VarEnv) -> str:
    try:
        this = venv.lookup("this")
    except UndefinedNameError:
        raise StuckError(StuckReason.UNDEFINED_NAME, "variable 'this'") from None
    if not isinstance(this, Addr):
        raise StuckError(StuckReason.TYPE_MISMATCH, "'this' is not an address")
    return this.name


def _lookup_fields(state: State, address: str) -> Env:
    try:
        return state.lookup(address)
    except UndefinedNameError:
        raise StuckError(StuckReason.UNDEFINED_NAME, f"address {address!r}") from None


def _enter_call(
    mtable: MethodTable,
    state: State,
    venv: VarEnv,
    s: Call,
    trace: list[CallRecord],
    work: list[tuple],
) -> tuple[State, VarEnv]:
    callee_v = eval_expr(state, venv, s.target)
    if not isinstance(callee_v, Addr):
        raise StuckError(StuckReason.TYPE_MISMATCH, f"call target is {_show_value(callee_v)}")
    callee = callee_v.name
    callee_fields = _lookup_fields(state, callee)
    try:
        methods = mtable.lookup(callee)
    except UndefinedNameError:
        raise StuckError(StuckReason.UNDEFINED_NAME, f"no code at address {callee!r}") from None
    try:
        params, body = methods.lookup(s.method)
    except UndefinedNameError:
        raise StuckError(StuckReason.UNDEFINED_NAME, f"method {callee}.{s.method}") from None
    if len(params) != len(s.args):
        raise StuckError(
            StuckReason.ARITY_MISMATCH,
            f"{callee}.{s.method} takes {len(params)} arguments, got {len(s.args)}",
        )
    args = [eval_expr(state, venv, a) for a in s.args]
    amount_v = eval_expr(state, venv, s.amount)
    if not isinstance(amount_v, Nat):
        raise StuckError(StuckReason.TYPE_MISMATCH, f"call amount is {_show_value(amount_v)}")
    amount = amount_v.n

    caller = _this_address(venv)
    caller_fields = _lookup_fields(state, caller)
    caller_balance = caller_fields.get(BALANCE)
    if not isinstance(caller_balance, Nat):
        raise StuckError(StuckReason.UNDEFINED_NAME, f"field 'balance' of {caller}")
    if amount > caller_balance.n:
        raise StuckError(
            StuckReason.INSUFFICIENT_BALANCE,
            f"{caller} holds {caller_balance.n}, cannot transfer {amount}",
        )

    # Debit then credit; the credit re-reads the state so a self-call nets
    # to zero rather than double-counting.
    state = state.update(caller, caller_fields.update(BALANCE, Nat(caller_balance.n - amount)))
    callee_fields = _lookup_fields(state, callee)
    callee_balance = callee_fields.get(BALANCE)
    if not isinstance(callee_balance, Nat):
        raise StuckError(StuckReason.UNDEFINED_NAME, f"field 'balance' of {callee}")
    state = state.update(callee, callee_fields.update(BALANCE, Nat(callee_balance.n + amount)))

    trace.append(CallRecord(caller, callee, s.method, tuple(args), amount))

    frame = [("this", Addr(callee)), ("sender", Addr(caller)), ("value", Nat(amount))]
    frame.extend(zip(params, args))
    work.append(("restore_venv", venv))
    work.append(("stmt", body))
    return state, Env.of(frame)


# ---------------------------------------------------------------------------
# Declarations and blockchains
# ---------------------------------------------------------------------------


def eval_declarations(contracts: tuple[ContractDecl, ...]) -> tuple[State, MethodTable]:
    """Build the genesis state and (immutable) method table."""
    state_pairs = []
    table_pairs = []
    for c in contracts:
        state_pairs.append((c.address, Env.of((name, v) for name, v in c.fields)))
        table_pairs.append((c.address, Env.of((m.name, (m.params, m.body)) for m in c.methods)))
    return Env.of(state_pairs), Env.of(table_pairs)


@dataclass(frozen=True)
class TxResult:
    transaction: Transaction
    status: str  # ok | thrown | stuck | out-of-fuel | not-run
    outcome: Outcome | None
    #: Calls made while running the transaction body; the record for the
    #: transaction's own dispatch is omitted.
    trace: Trace | None

    def to_json(self) -> dict:
        doc: dict = {"transaction": str(self.transaction), "status": self.status}
        if self.outcome is not None:
            doc["outcome"] = self.outcome.to_json()
        if self.trace is not None:
            doc["trace"] = [r.to_json() for r in self.trace]
        return doc


@dataclass(frozen=True)
class RunResult:
    genesis: State
    final_state: State
    method_table: MethodTable
    tx_results: tuple[TxResult, ...]

    @property
    def halted(self) -> bool:
        return any(r.status != "ok" for r in self.tx_results)

    def traces(self) -> list[Trace]:
        return [r.trace for r in self.tx_results if r.trace is not None]


def run_transaction(mtable: MethodTable, state: State, tx: Transaction, fuel: int = DEFAULT_FUEL) -> Outcome:
    """Dispatch one transaction: a call statement run with this = caller."""
    venv = Env.of([("this", Addr(tx.caller))])
    call = Call(
        Lit(Addr(tx.callee)),
        tx.method,
        tuple(Lit(v) for v in tx.args),
        Lit(Nat(tx.amount)),
    )
    return exec_stmt(mtable, state, venv, call, fuel)


def reported_trace(outcome: Outcome) -> Trace:
    """A transaction's observable trace: the calls its body made.

    The dispatch itself fires the call rule too, so the raw trace starts
    with one record for the transaction; that record is fixed by the
    transaction and carries no information about the context, so reported
    traces drop it.  If the dispatch never fired (a premise failed), the
    trace is already empty.
    """
    return outcome.trace[1:] if outcome.trace else ()


def run_blockchain(chain: Blockchain, fuel_per_transaction: int = DEFAULT_FUEL) -> RunResult:
    genesis, mtable = eval_declarations(chain.contracts)
    state = genesis
    results: list[TxResult] = []
    halted = False
    for tx in chain.transactions:
        if halted:
            results.append(TxResult(tx, "not-run", None, None))
            continue
        outcome = run_transaction(mtable, state, tx, fuel_per_transaction)
        results.append(TxResult(tx, outcome.kind.value, outcome, reported_trace(outcome)))
        if outcome.ok:
            state = outcome.state
        else:
            halted = True
    return RunResult(genesis, state, mtable, tuple(results))


def project_trace(trace: Trace, address: str) -> Trace:
    """Keep the records whose caller is ``address``, preserving order."""
    return tuple(r for r in trace if r.caller == address)


def total_supply(state: State) -> int:
    """Sum of all balances; conserved by every successful step."""
    out = 0
    for _, fields in state:
        bal = fields.get(BALANCE)
        if isinstance(bal, Nat):
            out += bal.n
    return out
