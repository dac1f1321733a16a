"""Surface-syntax parser.

Source files hold interface declarations, contract declarations, an
optional ``lattice { ... }`` block, and an optional trailing
``chain { ... }`` transaction list.  Identifier case is significant:
uppercase-initial names are addresses/interfaces, lowercase names are
variables, fields, and methods, so a bare ``X`` in an expression is an
address literal while ``x`` is a variable lookup.

The statement grammar uses ``;`` as a right-associative sequencing
operator; compound branches (if/while/var bodies) either are a single
statement or a ``{ ... }`` block.  ``f(e, ...)`` is sugar for
``this.f(e, ...):0``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    Addr,
    Assign,
    BaseType,
    Blockchain,
    Bool,
    BoxType,
    Call,
    ContractDecl,
    DeclVar,
    Expr,
    FieldRead,
    FieldTarget,
    If,
    IfaceType,
    InterfaceDecl,
    LevelType,
    Lit,
    Magic,
    MethodDecl,
    Nat,
    Op,
    ProcType,
    RESERVED_WORDS,
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
)
from .lattice import Lattice, default_lattice

KEYWORDS = RESERVED_WORDS

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<nat>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>->|:=|<=|>=|!=|&&|\|\||[{}();,.:<>=+\-*!])
""",
    re.VERBOSE,
)


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan | None = None):
        self.span = span
        where = f" at {span}" if span else ""
        super().__init__(message + where)


class ReservedWordError(ParseError):
    """A reserved word was used as an ordinary name."""


@dataclass(frozen=True)
class Token:
    kind: str  # nat | ident | sym | eof
    text: str
    span: SourceSpan


def tokenize(text: str, filename: str = "<string>") -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    col = 1
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(filename, pos, pos + 1, line, col)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            span = SourceSpan(filename, pos, m.end(), line, col)
            tokens.append(Token(kind, chunk, span))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rindex("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(filename, n, n, line, col)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("sym", "ident")

    def eat(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.span)
        return self.next()

    def ident(self, role: str) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected {role} name, found {tok.text or 'end of input'!r}", tok.span)
        if tok.text in KEYWORDS:
            raise ReservedWordError(f"reserved word {tok.text!r} cannot be used as a {role} name", tok.span)
        return self.next()

    def lower_ident(self, role: str) -> Token:
        tok = self.ident(role)
        if tok.text[0].isupper():
            raise ParseError(f"{role} names must start lowercase, found {tok.text!r}", tok.span)
        return tok

    def upper_ident(self, role: str) -> Token:
        tok = self.ident(role)
        if not tok.text[0].isupper():
            raise ParseError(f"{role} names must start uppercase, found {tok.text!r}", tok.span)
        return tok

    # -- program structure -------------------------------------------------

    def program(self) -> Blockchain:
        interfaces: list[InterfaceDecl] = []
        contracts: list[ContractDecl] = []
        transactions: list[Transaction] = []
        lattice_decl = None
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.text == "interface":
                interfaces.append(self.interface_decl())
            elif tok.text == "contract":
                contracts.append(self.contract_decl())
            elif tok.text == "chain":
                transactions.extend(self.chain_block())
            elif tok.text == "lattice":
                if lattice_decl is not None:
                    raise ParseError("duplicate lattice block", tok.span)
                lattice_decl = self.lattice_block()
            else:
                raise ParseError(
                    f"expected a declaration (interface/contract/lattice/chain), found {tok.text!r}", tok.span
                )
        return Blockchain(tuple(interfaces), tuple(contracts), tuple(transactions), lattice_decl)

    def lattice_block(self):
        self.eat("lattice")
        self.eat("{")
        elements: list[str] = []
        covers: list[tuple[str, str]] = []
        elements.append(self.ident("level").text)
        while self.at(","):
            self.eat(",")
            elements.append(self.ident("level").text)
        if self.at(";"):
            self.eat(";")
            if not self.at("}"):
                covers.append(self._cover())
                while self.at(","):
                    self.eat(",")
                    covers.append(self._cover())
        self.eat("}")
        return tuple(elements), tuple(covers)

    def _cover(self) -> tuple[str, str]:
        lo = self.ident("level").text
        self.eat("<")
        hi = self.ident("level").text
        return lo, hi

    def interface_decl(self) -> InterfaceDecl:
        start = self.eat("interface")
        name = self.upper_ident("interface").text
        param = None
        if self.at("<"):
            self.eat("<")
            param = self.lower_ident("level parameter").text
            self.eat(">")
        self.eat("{")
        fields: list[tuple[str, BoxType]] = []
        methods: list[tuple[str, ProcType]] = []
        while not self.at("}"):
            if self.at("field"):
                self.eat("field")
                fname = self._member_name("field")
                self.eat(":")
                fields.append((fname, self.box_type()))
                self.eat(";")
            elif self.at("method"):
                self.eat("method")
                mname = self._member_name("method")
                self.eat(":")
                methods.append((mname, self.proc_type()))
                self.eat(";")
            else:
                raise ParseError(f"expected field or method, found {self.peek().text!r}", self.peek().span)
        self.eat("}")
        return InterfaceDecl(name, param, tuple(fields), tuple(methods), span=start.span)

    def _member_name(self, role: str) -> str:
        # balance/send are declarable members even though magic names are not
        tok = self.peek()
        if tok.kind == "ident" and tok.text in ("balance", "send"):
            return self.next().text
        return self.lower_ident(role).text

    def box_type(self) -> BoxType:
        start = self.eat("<")
        base = self.base_type()
        self.eat(">")
        self.eat("var")
        return BoxType(base, span=start.span)

    def proc_type(self) -> ProcType:
        start = self.eat("<")
        params: list[BaseType] = []
        if not self.at(">"):
            params.append(self.base_type())
            while self.at(","):
                self.eat(",")
                params.append(self.base_type())
        self.eat(">")
        self.eat("->")
        level = self.ident("level").text
        self.eat("cmd")
        return ProcType(tuple(params), level, span=start.span)

    def base_type(self) -> BaseType:
        tok = self.ident("type")
        if self.at("<"):
            self.eat("<")
            level = self.ident("level").text
            self.eat(">")
            return IfaceType(tok.text, level, span=tok.span)
        return LevelType(tok.text, span=tok.span)

    def contract_decl(self) -> ContractDecl:
        start = self.eat("contract")
        address = self.upper_ident("contract").text
        interface = None
        level = None
        if self.at(":"):
            self.eat(":")
            interface = self.upper_ident("interface").text
            if self.at("<"):
                self.eat("<")
                level = self.ident("level").text
                self.eat(">")
        self.eat("{")
        fields: list[tuple[str, Value]] = []
        methods: list[MethodDecl] = []
        while not self.at("}"):
            if self.at("field"):
                self.eat("field")
                fname = self._member_name("field")
                self.eat(":=")
                fields.append((fname, self.value()))
                self.eat(";")
            else:
                methods.append(self.method_decl())
        self.eat("}")
        return ContractDecl(address, interface, level, tuple(fields), tuple(methods), span=start.span)

    def method_decl(self) -> MethodDecl:
        name_tok = self.peek()
        name = self._member_name("method")
        self.eat("(")
        params: list[str] = []
        if not self.at(")"):
            params.append(self.lower_ident("parameter").text)
            while self.at(","):
                self.eat(",")
                params.append(self.lower_ident("parameter").text)
        self.eat(")")
        self.eat("{")
        body: Stmt = Skip(span=name_tok.span) if self.at("}") else self.statement()
        self.eat("}")
        return MethodDecl(name, tuple(params), body, span=name_tok.span)

    def chain_block(self) -> list[Transaction]:
        self.eat("chain")
        self.eat("{")
        out: list[Transaction] = []
        while not self.at("}"):
            out.append(self.transaction())
            self.eat(";")
        self.eat("}")
        return out

    def transaction(self) -> Transaction:
        caller = self.upper_ident("address")
        self.eat("->")
        callee = self.upper_ident("address").text
        self.eat(".")
        method = self._member_name("method")
        self.eat("(")
        args: list[Value] = []
        if not self.at(")"):
            args.append(self.value())
            while self.at(","):
                self.eat(",")
                args.append(self.value())
        self.eat(")")
        self.eat(":")
        amount = self.peek()
        if amount.kind != "nat":
            raise ParseError(f"transaction amount must be a natural, found {amount.text!r}", amount.span)
        self.next()
        return Transaction(caller.text, callee, method, tuple(args), int(amount.text), span=caller.span)

    def value(self) -> Value:
        tok = self.peek()
        if tok.kind == "nat":
            self.next()
            return Nat(int(tok.text), span=tok.span)
        if tok.text == "true":
            self.next()
            return Bool(True, span=tok.span)
        if tok.text == "false":
            self.next()
            return Bool(False, span=tok.span)
        if tok.kind == "ident":
            addr = self.upper_ident("address")
            return Addr(addr.text, span=addr.span)
        raise ParseError(f"expected a value, found {tok.text or 'end of input'!r}", tok.span)

    # -- statements ----------------------------------------------------------

    def statement(self) -> Stmt:
        first = self.simple_statement()
        # `;` sequences, right-associated; a trailing `;` before a block
        # terminator is tolerated.
        if self.at(";"):
            self.eat(";")
            if self.peek().text in ("}", "else", "in") or self.peek().kind == "eof":
                return first
            rest = self.statement()
            return Seq(first, rest, span=first.span)
        return first

    def block_or_simple(self) -> Stmt:
        if self.at("{"):
            self.eat("{")
            body = self.statement()
            self.eat("}")
            return body
        return self.simple_statement()

    def simple_statement(self) -> Stmt:
        tok = self.peek()
        if tok.text == "skip":
            self.next()
            return Skip(span=tok.span)
        if tok.text == "throw":
            self.next()
            return Throw(span=tok.span)
        if tok.text == "{":
            return self.block_or_simple()
        if tok.text == "var":
            return self.var_decl()
        if tok.text == "if":
            self.next()
            guard = self.expression()
            self.eat("then")
            then_branch = self.block_or_simple()
            self.eat("else")
            else_branch = self.block_or_simple()
            return If(guard, then_branch, else_branch, span=tok.span)
        if tok.text == "while":
            self.next()
            guard = self.expression()
            self.eat("do")
            body = self.block_or_simple()
            return While(guard, body, span=tok.span)
        return self.assignment_or_call()

    def var_decl(self) -> DeclVar:
        start = self.eat("var")
        name = self.lower_ident("variable").text
        annotation = None
        if self.at(":"):
            self.eat(":")
            self.eat("<")
            annotation = self.base_type()
            self.eat(">")
        self.eat(":=")
        init = self.expression()
        self.eat("in")
        body = self.block_or_simple()
        return DeclVar(name, init, body, annotation, span=start.span)

    def assignment_or_call(self) -> Stmt:
        tok = self.peek()
        if tok.kind != "ident" and tok.text != "(":
            raise ParseError(f"expected a statement, found {tok.text or 'end of input'!r}", tok.span)

        # Local-call sugar: f(args) with a lowercase, non-reserved name.
        if (
            tok.kind == "ident"
            and tok.text not in KEYWORDS
            and not tok.text[0].isupper()
            and self.peek(1).text == "("
        ):
            name = self.next().text
            args = self._call_args()
            return Call(Magic("this", span=tok.span), name, args, Lit(Nat(0)), span=tok.span)

        target = self.primary()
        # Walk `.name` suffixes; stop when a call's argument list begins.
        while self.at("."):
            self.eat(".")
            member = self.peek()
            name = self._member_name("member")
            if self.at("("):
                args = self._call_args()
                self.eat(":")
                amount = self.expression()
                return Call(target, name, args, amount, span=tok.span)
            target = FieldRead(target, name, span=member.span)

        if self.at(":="):
            self.eat(":=")
            rhs = self.expression()
            if isinstance(target, Var):
                return Assign(VarTarget(target.name, span=target.span), rhs, span=tok.span)
            if isinstance(target, FieldRead) and isinstance(target.target, Magic) and target.target.name == "this":
                if target.fieldname == "balance":
                    raise ParseError("the balance field cannot be assigned directly", tok.span)
                return Assign(FieldTarget(target.fieldname, span=target.span), rhs, span=tok.span)
            raise ParseError("assignment targets are variables or this.field", tok.span)
        raise ParseError("expression statements are not allowed; expected ':=' or a method call", tok.span)

    def _call_args(self) -> tuple[Expr, ...]:
        self.eat("(")
        args: list[Expr] = []
        if not self.at(")"):
            args.append(self.expression())
            while self.at(","):
                self.eat(",")
                args.append(self.expression())
        self.eat(")")
        return tuple(args)

    # -- expressions ---------------------------------------------------------

    def expression(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        lhs = self.and_expr()
        while self.at("||"):
            op = self.next()
            lhs = Op("||", (lhs, self.and_expr()), span=op.span)
        return lhs

    def and_expr(self) -> Expr:
        lhs = self.cmp_expr()
        while self.at("&&"):
            op = self.next()
            lhs = Op("&&", (lhs, self.cmp_expr()), span=op.span)
        return lhs

    def cmp_expr(self) -> Expr:
        lhs = self.add_expr()
        if self.peek().text in ("=", "!=", "<", "<=", ">", ">="):
            op = self.next()
            return Op(op.text, (lhs, self.add_expr()), span=op.span)
        return lhs

    def add_expr(self) -> Expr:
        lhs = self.mul_expr()
        while self.peek().text in ("+", "-"):
            op = self.next()
            lhs = Op(op.text, (lhs, self.mul_expr()), span=op.span)
        return lhs

    def mul_expr(self) -> Expr:
        lhs = self.unary_expr()
        while self.at("*"):
            op = self.next()
            lhs = Op("*", (lhs, self.unary_expr()), span=op.span)
        return lhs

    def unary_expr(self) -> Expr:
        if self.at("!"):
            op = self.next()
            return Op("!", (self.unary_expr(),), span=op.span)
        return self.postfix_expr()

    def postfix_expr(self) -> Expr:
        e = self.primary()
        while self.at("."):
            dot = self.eat(".")
            name = self._member_name("field")
            if self.at("("):
                raise ParseError("method calls are statements, not expressions", dot.span)
            e = FieldRead(e, name, span=dot.span)
        return e

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "nat":
            self.next()
            return Lit(Nat(int(tok.text), span=tok.span), span=tok.span)
        if tok.text in ("true", "false"):
            self.next()
            return Lit(Bool(tok.text == "true", span=tok.span), span=tok.span)
        if tok.text in ("this", "sender", "value"):
            self.next()
            return Magic(tok.text, span=tok.span)
        if tok.text == "(":
            self.next()
            e = self.expression()
            self.eat(")")
            return e
        if tok.kind == "ident":
            name = self.ident("variable or address")
            if name.text[0].isupper():
                return Lit(Addr(name.text, span=name.span), span=name.span)
            return Var(name.text, span=name.span)
        raise ParseError(f"expected an expression, found {tok.text or 'end of input'!r}", tok.span)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def parse_program(text: str, filename: str = "<string>") -> Blockchain:
    parser = _Parser(tokenize(text, filename))
    return parser.program()


def parse_statement(text: str, filename: str = "<string>") -> Stmt:
    parser = _Parser(tokenize(text, filename))
    stmt = parser.statement()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input after statement: {tok.text!r}", tok.span)
    return stmt


def parse_transaction(text: str, filename: str = "<tx>") -> Transaction:
    parser = _Parser(tokenize(text, filename))
    tx = parser.transaction()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input after transaction: {tok.text!r}", tok.span)
    return tx


def program_lattice(chain: Blockchain) -> Lattice:
    """The lattice a program declares, or the two-point default."""
    if chain.lattice_decl is None:
        return default_lattice()
    elements, covers = chain.lattice_decl
    return Lattice.from_relations(list(elements), list(covers))
