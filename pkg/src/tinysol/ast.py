"""Abstract syntax for the contract language.

Node classes are frozen dataclasses.  Every node carries an optional
source span that is excluded from equality, so structural comparison
(and the parse/print round-trip test) ignores positions.

Identifier conventions mirror the surface syntax: names starting with
an uppercase letter are addresses and interface names, lowercase names
are variables, fields, and methods.  ``this``, ``sender``, and ``value``
are reserved words with their own node kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Union

MAGIC_NAMES = ("this", "sender", "value")
RESERVED_WORDS = frozenset(
    MAGIC_NAMES
    + (
        "contract",
        "interface",
        "field",
        "method",
        "var",
        "in",
        "if",
        "then",
        "else",
        "while",
        "do",
        "skip",
        "throw",
        "true",
        "false",
        "chain",
        "lattice",
        "cmd",
    )
)

BALANCE = "balance"
SEND = "send"


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start: int
    end: int
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


def _span_field():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Nat:
    n: int
    span: SourceSpan | None = _span_field()

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("naturals cannot be negative")


@dataclass(frozen=True)
class Bool:
    b: bool
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class Addr:
    name: str
    span: SourceSpan | None = _span_field()


Value = Union[Nat, Bool, Addr]


def value_to_json(v: Value) -> object:
    """Addresses become strings; naturals and booleans map to JSON natives."""
    if isinstance(v, Nat):
        return v.n
    if isinstance(v, Bool):
        return v.b
    return v.name


def value_from_json(x: object) -> Value:
    if isinstance(x, bool):
        return Bool(x)
    if isinstance(x, int):
        return Nat(x)
    if isinstance(x, str):
        return Addr(x)
    raise ValueError(f"not a value encoding: {x!r}")


# ---------------------------------------------------------------------------
# Security type annotations
# ---------------------------------------------------------------------------
#
# Base types are either a bare level or an interface instance at a level.
# Boxes wrap a base type (mutable storage), command types carry the write
# floor of a statement, and procedure types pair parameter boxes with the
# command level of the body.  Level names are resolved against the lattice
# by the checker, not here; an interface's level may also be its formal
# parameter name.


@dataclass(frozen=True)
class LevelType:
    level: str
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class IfaceType:
    iface: str
    level: str
    span: SourceSpan | None = _span_field()


BaseType = Union[LevelType, IfaceType]


@dataclass(frozen=True)
class BoxType:
    base: BaseType
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class CmdType:
    level: str
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class ProcType:
    params: tuple[BaseType, ...]
    level: str
    span: SourceSpan | None = _span_field()


SecType = Union[LevelType, IfaceType, BoxType, CmdType, ProcType]


def type_to_source(t: SecType) -> str:
    if isinstance(t, LevelType):
        return t.level
    if isinstance(t, IfaceType):
        return f"{t.iface}<{t.level}>"
    if isinstance(t, BoxType):
        return f"<{type_to_source(t.base)}> var"
    if isinstance(t, CmdType):
        return f"{t.level} cmd"
    if isinstance(t, ProcType):
        inner = ", ".join(type_to_source(p) for p in t.params)
        return f"<{inner}> -> {t.level} cmd"
    raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: Value
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class Var:
    name: str
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class Magic:
    name: str  # this | sender | value
    span: SourceSpan | None = _span_field()

    def __post_init__(self) -> None:
        if self.name not in MAGIC_NAMES:
            raise ValueError(f"not a builtin variable: {self.name!r}")


@dataclass(frozen=True)
class FieldRead:
    target: Expr
    fieldname: str
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class Op:
    op: str
    args: tuple[Expr, ...]
    span: SourceSpan | None = _span_field()


Expr = Union[Lit, Var, Magic, FieldRead, Op]


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Skip:
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class Throw:
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class VarTarget:
    name: str
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class FieldTarget:
    """Assignment target ``this.p``; the balance field is not assignable."""

    name: str
    span: SourceSpan | None = _span_field()


LValue = Union[VarTarget, FieldTarget]


@dataclass(frozen=True)
class Assign:
    lvalue: LValue
    expr: Expr
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class Seq:
    first: Stmt
    second: Stmt
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class If:
    guard: Expr
    then_branch: Stmt
    else_branch: Stmt
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class While:
    guard: Expr
    body: Stmt
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class DeclVar:
    """``var x := e in S`` with an optional storage annotation ``<B>``."""

    name: str
    init: Expr
    body: Stmt
    annotation: BaseType | None = None
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class Call:
    """``e1.f(args):amount`` — transfers ``amount`` and runs the method."""

    target: Expr
    method: str
    args: tuple[Expr, ...]
    amount: Expr
    span: SourceSpan | None = _span_field()


Stmt = Union[Skip, Throw, Assign, Seq, If, While, DeclVar, Call]

#: One constructor per statement production of the core grammar.
STMT_KINDS = (Skip, Throw, Assign, Seq, If, While, DeclVar, Call)


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: tuple[str, ...]
    body: Stmt
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class ContractDecl:
    address: str
    interface: str | None
    level: str | None
    fields: tuple[tuple[str, Value], ...]
    methods: tuple[MethodDecl, ...]
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class InterfaceDecl:
    """Interface with an optional level parameter.

    Member types may mention the parameter as a bare level name; it is
    substituted when a contract instantiates the interface at a level.
    """

    name: str
    param: str | None
    fields: tuple[tuple[str, BoxType], ...]
    methods: tuple[tuple[str, ProcType], ...]
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class Transaction:
    caller: str
    callee: str
    method: str
    args: tuple[Value, ...]
    amount: int
    span: SourceSpan | None = _span_field()

    def __str__(self) -> str:
        args = ", ".join(_value_to_source(v) for v in self.args)
        return f"{self.caller} -> {self.callee}.{self.method}({args}):{self.amount}"


@dataclass(frozen=True)
class Blockchain:
    interfaces: tuple[InterfaceDecl, ...]
    contracts: tuple[ContractDecl, ...]
    transactions: tuple[Transaction, ...]
    lattice_decl: tuple[tuple[str, ...], tuple[tuple[str, str], ...]] | None = None
    span: SourceSpan | None = _span_field()

    def contract(self, address: str) -> ContractDecl | None:
        for c in self.contracts:
            if c.address == address:
                return c
        return None

    def interface(self, name: str) -> InterfaceDecl | None:
        for i in self.interfaces:
            if i.name == name:
                return i
        return None


def is_account(contract: ContractDecl) -> bool:
    """An account holds only currency: a balance field and a trivial send.

    There is no syntactic class distinction, so this is a structural
    check: no extra fields, and the only method is ``send() { skip }``.
    """
    if len(contract.fields) != 1 or contract.fields[0][0] != BALANCE:
        return False
    if len(contract.methods) != 1:
        return False
    m = contract.methods[0]
    return m.name == SEND and m.params == () and isinstance(m.body, Skip)


# ---------------------------------------------------------------------------
# Structural validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: SourceSpan | None = _span_field()

    def __str__(self) -> str:
        where = f" at {self.span}" if self.span else ""
        return f"[{self.code}] {self.message}{where}"


def validate_program(chain: Blockchain) -> list[Diagnostic]:
    """Structural checks that do not need the type system.

    Covers duplicate member names, the mandatory ``balance`` field and
    ``send`` method (for contracts and interfaces alike), undeclared
    interface names, and address literals that no declaration binds.
    """
    out: list[Diagnostic] = []
    declared = {c.address for c in chain.contracts}
    iface_names = {i.name for i in chain.interfaces}

    seen_ifaces: set[str] = set()
    for iface in chain.interfaces:
        if iface.name in seen_ifaces:
            out.append(Diagnostic("DuplicateInterface", f"interface {iface.name} declared twice", iface.span))
        seen_ifaces.add(iface.name)
        _check_members(
            out,
            kind=f"interface {iface.name}",
            field_names=[p for p, _ in iface.fields],
            method_names=[m for m, _ in iface.methods],
            span=iface.span,
        )

    seen_addrs: set[str] = set()
    for c in chain.contracts:
        if c.address in seen_addrs:
            out.append(Diagnostic("DuplicateContract", f"contract {c.address} declared twice", c.span))
        seen_addrs.add(c.address)
        _check_members(
            out,
            kind=f"contract {c.address}",
            field_names=[p for p, _ in c.fields],
            method_names=[m.name for m in c.methods],
            span=c.span,
        )
        if c.interface is not None and c.interface not in iface_names:
            out.append(
                Diagnostic("UndeclaredInterface", f"contract {c.address} names unknown interface {c.interface}", c.span)
            )
        for name, v in c.fields:
            if isinstance(v, Addr) and v.name not in declared:
                out.append(
                    Diagnostic(
                        "UndeclaredAddress",
                        f"field {c.address}.{name} initialized with undeclared address {v.name}",
                        c.span,
                    )
                )
        for m in c.methods:
            for lit in _address_literals(m.body):
                if lit.name not in declared:
                    out.append(
                        Diagnostic(
                            "UndeclaredAddress",
                            f"method {c.address}.{m.name} references undeclared address {lit.name}",
                            lit.span or m.span,
                        )
                    )

    for t in chain.transactions:
        for name in (t.caller, t.callee):
            if name not in declared:
                out.append(Diagnostic("UndeclaredAddress", f"transaction {t} references undeclared {name}", t.span))
        for v in t.args:
            if isinstance(v, Addr) and v.name not in declared:
                out.append(Diagnostic("UndeclaredAddress", f"transaction {t} passes undeclared {v.name}", t.span))
    return out


def _check_members(out, *, kind: str, field_names: list[str], method_names: list[str], span) -> None:
    seen: set[str] = set()
    for p in field_names:
        if p in seen:
            out.append(Diagnostic("DuplicateField", f"{kind} declares field {p} twice", span))
        seen.add(p)
    seen = set()
    for mname in method_names:
        if mname in seen:
            out.append(Diagnostic("DuplicateMethod", f"{kind} declares method {mname} twice", span))
        seen.add(mname)
    if BALANCE not in field_names:
        out.append(Diagnostic("MissingMandatoryMember", f"{kind} lacks the balance field", span))
    if SEND not in method_names:
        out.append(Diagnostic("MissingMandatoryMember", f"{kind} lacks the send method", span))


def _address_literals(node) -> list[Addr]:
    found: list[Addr] = []

    def walk(n) -> None:
        if isinstance(n, Addr):
            found.append(n)
        elif isinstance(n, Lit):
            walk(n.value)
        elif hasattr(n, "__dataclass_fields__"):
            for f in fields(n):
                if f.name == "span":
                    continue
                v = getattr(n, f.name)
                if isinstance(v, tuple):
                    for item in v:
                        walk(item)
                else:
                    walk(v)

    walk(node)
    return found


# ---------------------------------------------------------------------------
# Pretty printer (inverse of the parser, used for round-trips and dumps)
# ---------------------------------------------------------------------------


def _value_to_source(v: Value) -> str:
    if isinstance(v, Nat):
        return str(v.n)
    if isinstance(v, Bool):
        return "true" if v.b else "false"
    return v.name


_PRECEDENCE = {"||": 1, "&&": 2, "=": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3, "+": 4, "-": 4, "*": 5}


def expr_to_source(e: Expr) -> str:
    return _expr(e, 0)


def _expr(e: Expr, parent_prec: int) -> str:
    if isinstance(e, Lit):
        return _value_to_source(e.value)
    if isinstance(e, (Var, Magic)):
        return e.name
    if isinstance(e, FieldRead):
        return f"{_expr(e.target, 6)}.{e.fieldname}"
    if isinstance(e, Op):
        if e.op == "!":
            return f"!{_expr(e.args[0], 6)}"
        prec = _PRECEDENCE[e.op]
        lhs = _expr(e.args[0], prec)
        rhs = _expr(e.args[1], prec + 1)
        body = f"{lhs} {e.op} {rhs}"
        return f"({body})" if prec < parent_prec else body
    raise TypeError(f"not an expression: {e!r}")


def stmt_to_source(s: Stmt, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(s, Skip):
        return f"{pad}skip"
    if isinstance(s, Throw):
        return f"{pad}throw"
    if isinstance(s, Assign):
        target = s.lvalue.name if isinstance(s.lvalue, VarTarget) else f"this.{s.lvalue.name}"
        return f"{pad}{target} := {expr_to_source(s.expr)}"
    if isinstance(s, Seq):
        return f"{stmt_to_source(s.first, indent)};\n{stmt_to_source(s.second, indent)}"
    if isinstance(s, If):
        return (
            f"{pad}if {expr_to_source(s.guard)} then {{\n"
            f"{stmt_to_source(s.then_branch, indent + 1)}\n"
            f"{pad}}} else {{\n"
            f"{stmt_to_source(s.else_branch, indent + 1)}\n"
            f"{pad}}}"
        )
    if isinstance(s, While):
        return f"{pad}while {expr_to_source(s.guard)} do {{\n{stmt_to_source(s.body, indent + 1)}\n{pad}}}"
    if isinstance(s, DeclVar):
        ann = f" : <{type_to_source(s.annotation)}>" if s.annotation is not None else ""
        return (
            f"{pad}var {s.name}{ann} := {expr_to_source(s.init)} in {{\n"
            f"{stmt_to_source(s.body, indent + 1)}\n{pad}}}"
        )
    if isinstance(s, Call):
        args = ", ".join(expr_to_source(a) for a in s.args)
        return f"{pad}{_expr(s.target, 6)}.{s.method}({args}):{expr_to_source(s.amount)}"
    raise TypeError(f"not a statement: {s!r}")


def program_to_source(chain: Blockchain) -> str:
    parts: list[str] = []
    if chain.lattice_decl is not None:
        elements, covers = chain.lattice_decl
        rels = ", ".join(f"{lo} < {hi}" for lo, hi in covers)
        body = ", ".join(elements) + (f"; {rels}" if rels else "")
        parts.append(f"lattice {{ {body} }}")
    for iface in chain.interfaces:
        head = f"interface {iface.name}" + (f"<{iface.param}>" if iface.param else "")
        lines = [head + " {"]
        for name, box in iface.fields:
            lines.append(f"  field {name} : {type_to_source(box)};")
        for name, proc in iface.methods:
            lines.append(f"  method {name} : {type_to_source(proc)};")
        lines.append("}")
        parts.append("\n".join(lines))
    for c in chain.contracts:
        head = f"contract {c.address}"
        if c.interface is not None:
            head += f" : {c.interface}<{c.level}>" if c.level is not None else f" : {c.interface}"
        lines = [head + " {"]
        for name, v in c.fields:
            lines.append(f"  field {name} := {_value_to_source(v)};")
        for m in c.methods:
            params = ", ".join(m.params)
            lines.append(f"  {m.name}({params}) {{")
            lines.append(stmt_to_source(m.body, 2))
            lines.append("  }")
        lines.append("}")
        parts.append("\n".join(lines))
    if chain.transactions:
        lines = ["chain {"]
        for t in chain.transactions:
            lines.append(f"  {t};")
        lines.append("}")
        parts.append("\n".join(lines))
    return "\n\n".join(parts) + "\n"
