"""Security type system: subtyping, checking, and level-indexed equality.

The checker is algorithmic: it synthesizes the minimal base type of an
expression and the maximal command level of a statement, applying
subsumption where a premise demands a specific type (assignment targets,
guards, call arguments, transfer amounts, and the caller-balance premise
of a call).  Every judgment produces a ``Derivation`` tree whose nodes
name the rule applied; failed premises stay in the tree marked FAIL, so
a rejection always comes with the failing rule path.

Level discipline in brief: boxes are invariant storage (assignments
check the payload, never re-level the box), command levels are write
floors (a statement at level s writes no field or variable below s, so
command subtyping is contravariant), and a call types at the callee
method's level, which must absorb the transfer amount, the argument
types, and the caller's own balance debit.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Iterable, Mapping

from .ast import (
    Addr,
    Assign,
    BaseType,
    Blockchain,
    Bool,
    BoxType,
    Call,
    CmdType,
    ContractDecl,
    DeclVar,
    Diagnostic,
    Expr,
    FieldRead,
    FieldTarget,
    If,
    IfaceType,
    InterfaceDecl,
    LevelType,
    Lit,
    Magic,
    Nat,
    Op,
    ProcType,
    SecType,
    Seq,
    Skip,
    SourceSpan,
    Stmt,
    Throw,
    Transaction,
    Value,
    Var,
    VarTarget,
    While,
    type_to_source,
)
from .env import Env, MethodTable, State, VarEnv
from .lattice import Lattice
from .parser import program_lattice

#: Name of the built-in minimal interface every contract type refines:
#: a balance readable only at top and a send callable from anywhere.
TOP_IFACE = "Top"

BALANCE = "balance"
SEND = "send"


# ---------------------------------------------------------------------------
# Issues and derivations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeIssue:
    code: str
    message: str
    span: SourceSpan | None = dc_field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        where = f" at {self.span}" if self.span else ""
        return f"[{self.code}] {self.message}{where}"


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: str
    children: tuple["Derivation", ...] = ()
    ok: bool = True
    note: str | None = None

    def to_json(self) -> dict:
        doc: dict = {"rule": self.rule, "conclusion": self.conclusion, "ok": self.ok}
        if self.note:
            doc["note"] = self.note
        if self.children:
            doc["children"] = [c.to_json() for c in self.children]
        return doc


def render_derivation(d: Derivation, indent: int = 0) -> str:
    mark = "" if d.ok else "  FAIL" + (f": {d.note}" if d.note else "")
    lines = ["  " * indent + f"[{d.rule}] {d.conclusion}{mark}"]
    for child in d.children:
        lines.append(render_derivation(child, indent + 1))
    return "\n".join(lines)


def failing_rule_path(d: Derivation) -> list[str]:
    """Rule names from the root to the first failing leaf."""
    path: list[str] = []
    node: Derivation | None = d
    while node is not None and not node.ok:
        path.append(node.rule)
        node = next((c for c in node.children if not c.ok), None)
    return path


def _fail(rule: str, conclusion: str, note: str, children: tuple[Derivation, ...] = ()) -> Derivation:
    return Derivation(rule, conclusion, children, ok=False, note=note)


# ---------------------------------------------------------------------------
# Type environments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeEnv:
    """Γ: term names to types, plus the interface table and the lattice.

    Interface instantiations are resolved lazily: an ``IfaceType(I, s)``
    names the declaration ``I`` with its level parameter replaced by
    ``s``, so each instantiation acts as its own member environment.
    """

    lattice: Lattice
    interfaces: Mapping[str, InterfaceDecl]
    terms: Env  # name -> SecType (BoxType for variables, IfaceType for addresses)

    def with_var(self, name: str, typ: SecType) -> "TypeEnv":
        return TypeEnv(self.lattice, self.interfaces, self.terms.prepend(name, typ))

    def lookup(self, name: str) -> SecType | None:
        return self.terms.get(name)

    def members(self, iface: IfaceType) -> dict[str, SecType] | None:
        """Instantiated member environment of an interface type."""
        if iface.iface == TOP_IFACE:
            return {
                BALANCE: BoxType(LevelType(self.lattice.top)),
                SEND: ProcType((), self.lattice.bottom),
            }
        decl = self.interfaces.get(iface.iface)
        if decl is None:
            return None
        out: dict[str, SecType] = {}
        for name, box in decl.fields:
            out[name] = _subst(box, decl.param, iface.level)
        for name, proc in decl.methods:
            out[name] = _subst(proc, decl.param, iface.level)
        return out

    def member(self, iface: IfaceType, name: str) -> SecType | None:
        env = self.members(iface)
        if env is None:
            return None
        return env.get(name)


def _subst(t: SecType, param: str | None, level: str) -> SecType:
    if param is None:
        return t
    if isinstance(t, LevelType):
        return LevelType(level) if t.level == param else t
    if isinstance(t, IfaceType):
        return IfaceType(t.iface, level) if t.level == param else t
    if isinstance(t, BoxType):
        return BoxType(_subst(t.base, param, level))
    if isinstance(t, CmdType):
        return CmdType(level) if t.level == param else t
    if isinstance(t, ProcType):
        params = tuple(_subst(p, param, level) for p in t.params)
        return ProcType(params, level if t.level == param else t.level)
    raise TypeError(f"not a type: {t!r}")


def level_of(t: BaseType) -> str:
    """The security level a base type reads at."""
    if isinstance(t, (LevelType, IfaceType)):
        return t.level
    raise TypeError(f"no level for {t!r}")


# ---------------------------------------------------------------------------
# Subtyping
# ---------------------------------------------------------------------------


def subtype(tenv: TypeEnv, t1: SecType, t2: SecType, _seen: frozenset = frozenset()) -> Derivation:
    """Derive ``t1 <= t2``; the returned tree's ``ok`` is the verdict."""
    lat = tenv.lattice
    concl = f"{type_to_source(t1)} <= {type_to_source(t2)}"

    if isinstance(t1, LevelType) and isinstance(t2, LevelType):
        if lat.leq(t1.level, t2.level):
            return Derivation("subs-sec", concl)
        return _fail("subs-sec", concl, f"{t1.level} !<= {t2.level}")

    if isinstance(t1, IfaceType) and isinstance(t2, IfaceType):
        if t1.iface == t2.iface and t1.level == t2.level:
            return Derivation("subs-name", concl)
        if not lat.leq(t1.level, t2.level):
            return _fail("subs-name", concl, f"{t1.level} !<= {t2.level}")
        key = (t1.iface, t1.level, t2.iface, t2.level)
        if key in _seen:  # recursive interfaces: assume the pair and move on
            return Derivation("subs-name", concl, note="assumed")
        env1 = tenv.members(t1)
        env2 = tenv.members(t2)
        if env1 is None or env2 is None:
            missing = t1.iface if env1 is None else t2.iface
            return _fail("subs-name", concl, f"unknown interface {missing}")
        env_deriv = _subtype_env(tenv, env1, env2, _seen | {key})
        if env_deriv.ok:
            return Derivation("subs-name", concl, (env_deriv,))
        return _fail("subs-name", concl, "member types do not conform", (env_deriv,))

    if isinstance(t1, BoxType) and isinstance(t2, BoxType):
        inner = subtype(tenv, t1.base, t2.base, _seen)
        if inner.ok:
            return Derivation("subs-var", concl, (inner,))
        return _fail("subs-var", concl, "payload does not conform", (inner,))

    if isinstance(t1, CmdType) and isinstance(t2, CmdType):
        # A statement writing at s1 serves wherever writes at s2 <= s1 suffice.
        if lat.leq(t2.level, t1.level):
            return Derivation("subs-cmd", concl)
        return _fail("subs-cmd", concl, f"{t2.level} !<= {t1.level}")

    if isinstance(t1, ProcType) and isinstance(t2, ProcType):
        if len(t1.params) != len(t2.params):
            return _fail("subs-proc", concl, "parameter count differs")
        children = []
        ok = True
        for p1, p2 in zip(t1.params, t2.params):
            d = subtype(tenv, p1, p2, _seen)
            children.append(d)
            ok = ok and d.ok
        if not lat.leq(t2.level, t1.level):
            return _fail("subs-proc", concl, f"{t2.level} !<= {t1.level}", tuple(children))
        if ok:
            return Derivation("subs-proc", concl, tuple(children))
        return _fail("subs-proc", concl, "parameter types do not conform", tuple(children))

    return _fail("subs", concl, "incompatible type shapes")


def _subtype_env(tenv: TypeEnv, env1: dict[str, SecType], env2: dict[str, SecType], seen: frozenset) -> Derivation:
    children = []
    ok = True
    note = None
    for name, t2 in env2.items():
        t1 = env1.get(name)
        if t1 is None:
            ok = False
            note = f"missing member {name}"
            children.append(_fail("subs-env", f"{name} present", f"missing member {name}"))
            continue
        d = subtype(tenv, t1, t2, seen)
        children.append(
            Derivation("member", f"{name}: {d.conclusion}", (d,), ok=d.ok, note=None if d.ok else d.note)
        )
        ok = ok and d.ok
    if ok:
        return Derivation("subs-env", "members conform", tuple(children))
    return _fail("subs-env", "members conform", note or "member types do not conform", tuple(children))


# ---------------------------------------------------------------------------
# Expression checking (minimal-type synthesis)
# ---------------------------------------------------------------------------


@dataclass
class ExprResult:
    typ: BaseType | None
    deriv: Derivation
    errors: list[TypeIssue]

    @property
    def ok(self) -> bool:
        return self.typ is not None


def _expr_src(e: Expr) -> str:
    from .ast import expr_to_source

    return expr_to_source(e)


def check_expr(tenv: TypeEnv, expr: Expr) -> ExprResult:
    src = _expr_src(expr)

    if isinstance(expr, Lit):
        v = expr.value
        if isinstance(v, Addr):
            t = tenv.lookup(v.name)
            if t is None:
                err = TypeIssue("UnboundName", f"address {v.name} has no declared type", expr.span)
                return ExprResult(None, _fail("t-val", f"{src} : ?", err.message), [err])
            return ExprResult(t, Derivation("t-val", f"{src} : {type_to_source(t)}"), [])  # type: ignore[arg-type]
        t = LevelType(tenv.lattice.bottom)
        return ExprResult(t, Derivation("t-val", f"{src} : {type_to_source(t)}"), [])

    if isinstance(expr, (Var, Magic)):
        t = tenv.lookup(expr.name)
        if t is None:
            err = TypeIssue("UnboundName", f"variable {expr.name} is not in scope", expr.span)
            return ExprResult(None, _fail("t-var", f"{src} : ?", err.message), [err])
        if not isinstance(t, BoxType):
            err = TypeIssue("UnboundName", f"{expr.name} does not name a variable", expr.span)
            return ExprResult(None, _fail("t-var", f"{src} : ?", err.message), [err])
        box = Derivation("t-box-x", f"{src} : {type_to_source(t)}")
        return ExprResult(t.base, Derivation("t-var", f"{src} : {type_to_source(t.base)}", (box,)), [])

    if isinstance(expr, FieldRead):
        looked = _lookup_member(tenv, expr.target, expr.fieldname, expr.span, want_field=True)
        if looked.errors:
            return ExprResult(None, looked.deriv, looked.errors)
        assert isinstance(looked.typ, BoxType)
        base = looked.typ.base
        return ExprResult(base, Derivation("t-field", f"{src} : {type_to_source(base)}", (looked.deriv,)), [])

    if isinstance(expr, Op):
        children = []
        errors: list[TypeIssue] = []
        levels: list[str] = []
        for arg in expr.args:
            r = check_expr(tenv, arg)
            children.append(r.deriv)
            errors.extend(r.errors)
            if r.typ is not None:
                levels.append(level_of(r.typ))
        if errors:
            return ExprResult(None, _fail("t-op", f"{src} : ?", "argument does not type", tuple(children)), errors)
        joined = tenv.lattice.join_all(levels)
        t = LevelType(joined)
        return ExprResult(t, Derivation("t-op", f"{src} : {joined}", tuple(children)), [])

    raise TypeError(f"not an expression: {expr!r}")


@dataclass
class _MemberResult:
    typ: SecType | None  # BoxType for fields, ProcType for methods
    deriv: Derivation
    errors: list[TypeIssue]


def _lookup_member(
    tenv: TypeEnv, target: Expr, name: str, span: SourceSpan | None, *, want_field: bool
) -> _MemberResult:
    """Resolve ``target.name`` through the target's interface.

    The member is only visible when the path can be typed at the member's
    own level, so a path below it is lifted by subsumption and a path
    above it is a level mismatch.
    """
    rule = "t-box-f" if want_field else "t-meth"
    src = f"{_expr_src(target)}.{name}"
    tr = check_expr(tenv, target)
    if not tr.ok:
        return _MemberResult(None, _fail(rule, f"{src} : ?", "path does not type", (tr.deriv,)), tr.errors)
    if not isinstance(tr.typ, IfaceType):
        err = TypeIssue(
            "AddressArithmetic",
            f"{_expr_src(target)} has data type {type_to_source(tr.typ)}, not an interface",
            span,
        )
        return _MemberResult(None, _fail(rule, f"{src} : ?", err.message, (tr.deriv,)), [err])
    member = tenv.member(tr.typ, name)
    if member is None:
        kind = "interface" if tenv.members(tr.typ) is not None else "unknown interface for"
        err = TypeIssue("UnboundMember", f"{kind} {tr.typ.iface} has no member {name}", span)
        return _MemberResult(None, _fail(rule, f"{src} : ?", err.message, (tr.deriv,)), [err])
    if want_field and not isinstance(member, BoxType):
        err = TypeIssue("UnboundMember", f"{tr.typ.iface}.{name} is a method, not a field", span)
        return _MemberResult(None, _fail(rule, f"{src} : ?", err.message, (tr.deriv,)), [err])
    if not want_field and not isinstance(member, ProcType):
        err = TypeIssue("UnboundMember", f"{tr.typ.iface}.{name} is a field, not a method", span)
        return _MemberResult(None, _fail(rule, f"{src} : ?", err.message, (tr.deriv,)), [err])

    member_level = level_of(member.base) if isinstance(member, BoxType) else member.level
    path_level = tr.typ.level
    concl = f"{src} : {type_to_source(member)}"
    children = [tr.deriv]
    if path_level != member_level:
        lift = subtype(tenv, tr.typ, IfaceType(tr.typ.iface, member_level))
        children.append(lift)
        if not lift.ok:
            err = TypeIssue(
                "PathLevelMismatch",
                f"path {_expr_src(target)} is at {path_level} but member {name} sits at {member_level}",
                span,
            )
            return _MemberResult(None, _fail(rule, concl, err.message, tuple(children)), [err])
    return _MemberResult(member, Derivation(rule, concl, tuple(children)), [])


def _check_against(tenv: TypeEnv, expr: Expr, expected: BaseType) -> tuple[Derivation, list[TypeIssue]]:
    """Synthesize and coerce up: ``expr`` must fit below ``expected``."""
    r = check_expr(tenv, expr)
    if not r.ok:
        return r.deriv, r.errors
    assert r.typ is not None
    if r.typ == expected:
        return r.deriv, []
    sub = subtype(tenv, r.typ, expected)
    deriv = Derivation(
        "t-subs-e",
        f"{_expr_src(expr)} : {type_to_source(expected)}",
        (r.deriv, sub),
        ok=sub.ok,
        note=None if sub.ok else sub.note,
    )
    if sub.ok:
        return deriv, []
    err = TypeIssue(
        "TypeMismatch",
        f"{_expr_src(expr)} has type {type_to_source(r.typ)}, which does not coerce to {type_to_source(expected)}",
        expr.span,
    )
    return deriv, [err]


# ---------------------------------------------------------------------------
# Statement checking (maximal-level synthesis)
# ---------------------------------------------------------------------------


@dataclass
class StmtResult:
    level: str | None  # maximal derivable command level
    deriv: Derivation
    errors: list[TypeIssue]

    @property
    def ok(self) -> bool:
        return self.level is not None


def _stmt_head(s: Stmt) -> str:
    from .ast import expr_to_source

    if isinstance(s, Skip):
        return "skip"
    if isinstance(s, Throw):
        return "throw"
    if isinstance(s, Assign):
        target = s.lvalue.name if isinstance(s.lvalue, VarTarget) else f"this.{s.lvalue.name}"
        return f"{target} := {expr_to_source(s.expr)}"
    if isinstance(s, Seq):
        return f"{_stmt_head(s.first)}; ..."
    if isinstance(s, If):
        return f"if {expr_to_source(s.guard)} then ... else ..."
    if isinstance(s, While):
        return f"while {expr_to_source(s.guard)} do ..."
    if isinstance(s, DeclVar):
        return f"var {s.name} := {expr_to_source(s.init)} in ..."
    if isinstance(s, Call):
        args = ", ".join(expr_to_source(a) for a in s.args)
        return f"{expr_to_source(s.target)}.{s.method}({args}):{expr_to_source(s.amount)}"
    raise TypeError(f"not a statement: {s!r}")


def check_stmt(tenv: TypeEnv, stmt: Stmt) -> StmtResult:
    lat = tenv.lattice
    head = _stmt_head(stmt)

    if isinstance(stmt, Skip):
        return StmtResult(lat.top, Derivation("t-skip", f"skip : {lat.top} cmd"), [])
    if isinstance(stmt, Throw):
        return StmtResult(lat.top, Derivation("t-throw", f"throw : {lat.top} cmd"), [])

    if isinstance(stmt, Assign):
        if isinstance(stmt.lvalue, VarTarget):
            rule = "t-ass-v"
            t = tenv.lookup(stmt.lvalue.name)
            if not isinstance(t, BoxType):
                err = TypeIssue("UnboundName", f"variable {stmt.lvalue.name} is not in scope", stmt.span)
                return StmtResult(None, _fail(rule, f"{head} : ?", err.message), [err])
            box, box_deriv = t, Derivation("t-box-x", f"{stmt.lvalue.name} : {type_to_source(t)}")
        else:
            rule = "t-ass-f"
            looked = _lookup_member(tenv, Magic("this"), stmt.lvalue.name, stmt.span, want_field=True)
            if looked.errors:
                return StmtResult(None, _fail(rule, f"{head} : ?", "target does not type", (looked.deriv,)), looked.errors)
            assert isinstance(looked.typ, BoxType)
            box, box_deriv = looked.typ, looked.deriv
        rhs_deriv, rhs_errors = _check_against(tenv, stmt.expr, box.base)
        lvl = level_of(box.base)
        if rhs_errors:
            return StmtResult(None, _fail(rule, f"{head} : {lvl} cmd", "value does not fit the target", (box_deriv, rhs_deriv)), rhs_errors)
        return StmtResult(lvl, Derivation(rule, f"{head} : {lvl} cmd", (box_deriv, rhs_deriv)), [])

    if isinstance(stmt, Seq):
        r1 = check_stmt(tenv, stmt.first)
        r2 = check_stmt(tenv, stmt.second)
        errors = r1.errors + r2.errors
        if not (r1.ok and r2.ok):
            return StmtResult(None, _fail("t-seq", f"{head} : ?", "component does not type", (r1.deriv, r2.deriv)), errors)
        lvl = lat.meet(r1.level, r2.level)
        return StmtResult(lvl, Derivation("t-seq", f"{head} : {lvl} cmd", (r1.deriv, r2.deriv)), [])

    if isinstance(stmt, If):
        g = check_expr(tenv, stmt.guard)
        r1 = check_stmt(tenv, stmt.then_branch)
        r2 = check_stmt(tenv, stmt.else_branch)
        errors = g.errors + r1.errors + r2.errors
        children = (g.deriv, r1.deriv, r2.deriv)
        if errors or not (g.ok and r1.ok and r2.ok):
            return StmtResult(None, _fail("t-if", f"{head} : ?", "component does not type", children), errors)
        branch_lvl = lat.meet(r1.level, r2.level)
        guard_lvl = level_of(g.typ)
        if not lat.leq(guard_lvl, branch_lvl):
            err = TypeIssue(
                "ImplicitFlow",
                f"guard reads at {guard_lvl} but the branches only write at {branch_lvl}",
                stmt.span,
            )
            return StmtResult(None, _fail("t-if", f"{head} : {branch_lvl} cmd", err.message, children), [err])
        return StmtResult(branch_lvl, Derivation("t-if", f"{head} : {branch_lvl} cmd", children), [])

    if isinstance(stmt, While):
        g = check_expr(tenv, stmt.guard)
        rb = check_stmt(tenv, stmt.body)
        errors = g.errors + rb.errors
        children = (g.deriv, rb.deriv)
        if errors or not (g.ok and rb.ok):
            return StmtResult(None, _fail("t-loop", f"{head} : ?", "component does not type", children), errors)
        guard_lvl = level_of(g.typ)
        if not lat.leq(guard_lvl, rb.level):
            err = TypeIssue(
                "ImplicitFlow",
                f"guard reads at {guard_lvl} but the body only writes at {rb.level}",
                stmt.span,
            )
            return StmtResult(None, _fail("t-loop", f"{head} : {rb.level} cmd", err.message, children), [err])
        return StmtResult(rb.level, Derivation("t-loop", f"{head} : {rb.level} cmd", children), [])

    if isinstance(stmt, DeclVar):
        if stmt.annotation is not None:
            ann = stmt.annotation
            init_deriv, init_errors = _check_against(tenv, stmt.init, ann)
        else:
            r = check_expr(tenv, stmt.init)
            ann = r.typ
            init_deriv, init_errors = r.deriv, r.errors
        if init_errors or ann is None:
            return StmtResult(None, _fail("t-decvar", f"{head} : ?", "initializer does not type", (init_deriv,)), init_errors)
        inner = tenv.with_var(stmt.name, BoxType(ann))
        rb = check_stmt(inner, stmt.body)
        if not rb.ok:
            return StmtResult(None, _fail("t-decvar", f"{head} : ?", "body does not type", (init_deriv, rb.deriv)), rb.errors)
        return StmtResult(rb.level, Derivation("t-decvar", f"{head} : {rb.level} cmd", (init_deriv, rb.deriv)), [])

    if isinstance(stmt, Call):
        return _check_call(tenv, stmt)

    raise TypeError(f"not a statement: {stmt!r}")


def _check_call(tenv: TypeEnv, stmt: Call) -> StmtResult:
    head = _stmt_head(stmt)
    looked = _lookup_member(tenv, stmt.target, stmt.method, stmt.span, want_field=False)
    if looked.errors:
        return StmtResult(None, _fail("t-call", f"{head} : ?", "method does not resolve", (looked.deriv,)), looked.errors)
    proc = looked.typ
    assert isinstance(proc, ProcType)
    lvl = proc.level
    children: list[Derivation] = [looked.deriv]
    errors: list[TypeIssue] = []

    if len(proc.params) != len(stmt.args):
        err = TypeIssue(
            "ArityMismatch",
            f"{stmt.method} takes {len(proc.params)} arguments, call passes {len(stmt.args)}",
            stmt.span,
        )
        return StmtResult(None, _fail("t-call", f"{head} : {lvl} cmd", err.message, tuple(children)), [err])

    for arg, expected in zip(stmt.args, proc.params):
        d, errs = _check_against(tenv, arg, expected)
        children.append(d)
        errors.extend(errs)

    amount_deriv, amount_errors = _check_against(tenv, stmt.amount, LevelType(lvl))
    children.append(amount_deriv)
    errors.extend(amount_errors)

    balance_deriv, balance_errors = _caller_balance_at(tenv, lvl, stmt.span)
    children.append(balance_deriv)
    errors.extend(balance_errors)

    if errors:
        return StmtResult(None, _fail("t-call", f"{head} : {lvl} cmd", "premise fails", tuple(children)), errors)
    return StmtResult(lvl, Derivation("t-call", f"{head} : {lvl} cmd", tuple(children)), [])


def _caller_balance_at(tenv: TypeEnv, lvl: str, span: SourceSpan | None) -> tuple[Derivation, list[TypeIssue]]:
    """Premise ``this.balance : <lvl> var``.

    The debit of a call lands on the caller's balance, so the balance box
    must be concludable at the call's level; a balance below it can be
    coerced up, one above it cannot.
    """
    looked = _lookup_member(tenv, Magic("this"), BALANCE, span, want_field=True)
    if looked.errors:
        return looked.deriv, looked.errors
    assert isinstance(looked.typ, BoxType)
    have = looked.typ
    want = BoxType(LevelType(lvl))
    concl = f"this.balance : {type_to_source(want)}"
    if level_of(have.base) == lvl:
        return Derivation("premise", concl, (looked.deriv,)), []
    lift = subtype(tenv, have, want)
    deriv = Derivation("premise", concl, (looked.deriv, lift), ok=lift.ok, note=None if lift.ok else lift.note)
    if lift.ok:
        return deriv, []
    err = TypeIssue(
        "BalanceLevel",
        f"caller balance sits at {level_of(have.base)}, which does not coerce to the call level {lvl}",
        span,
    )
    return deriv, [err]
