"""Lexer, recursive-descent parser, and binder resolution for the DSL.

Every variable reference is resolved against an enclosing binder while
parsing, so no unresolved name survives into the AST.  Diagnostics carry
file:line:col positions.

One normalization happens here: a while-head of the form
``while (!g.reduction_frontier())`` is read as "while the frontier is
non-empty": the generated loops iterate the frontier, so the negated
spelling found in some sources is treated as an idiom (see docs/grammar.md).
Inside ``if`` conditions the negation keeps its literal empty-test meaning.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from graphpulse import ast_nodes as A
from graphpulse.ops import op_from_name

OP_NAMES = ("Min", "Max", "Sum")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*|//[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>\+\+|<=|>=|==|!=|[<>=!+\-*(){}\[\].,;])
    """,
    re.VERBOSE,
)


class DslError(Exception):
    def __init__(self, filename: str, line: int, col: int, message: str):
        self.filename = filename
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"{filename}:{line}:{col}: {message}")


class DslSyntaxError(DslError):
    pass


class DslNameError(DslError):
    pass


@dataclass
class Token:
    kind: str  # "int", "ident", "punct", "eof"
    text: str
    line: int
    col: int


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise DslSyntaxError(filename, line, col, f"unexpected character {source[pos]!r}")
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(text)
        else:
            tokens.append(Token(kind, text, line, col))
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Scope:
    def __init__(self, parent=None):
        self.parent = parent
        self.names: dict[str, str] = {}  # name -> kind: node, edge, int, prop, cache

    def lookup(self, name: str):
        scope = self
        while scope is not None:
            if name in scope.names:
                return scope.names[name]
            scope = scope.parent
        return None

    def define(self, name: str, kind: str):
        self.names[name] = kind


class Parser:
    def __init__(self, source: str, filename: str = "<input>"):
        self.filename = filename
        self.tokens = tokenize(source, filename)
        self.i = 0
        self.prop_order: list[str] = []

    # --- token helpers ---

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("punct", "ident")

    def accept(self, text: str):
        if self.at(text):
            return self.next()
        return None

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.at(text):
            shown = tok.text if tok.kind != "eof" else "end of input"
            raise DslSyntaxError(self.filename, tok.line, tok.col, f"expected {text!r}, found {shown!r}")
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise DslSyntaxError(self.filename, tok.line, tok.col, f"expected {what}, found {tok.text!r}")
        return self.next()

    def err_name(self, tok: Token, message: str):
        raise DslNameError(self.filename, tok.line, tok.col, message)

    # --- entry point ---

    def parse_program(self) -> A.Program:
        scope = _Scope()
        body = self.parse_block_items(scope, top_level=True)
        tok = self.peek()
        if tok.kind != "eof":
            raise DslSyntaxError(self.filename, tok.line, tok.col, f"unexpected {tok.text!r}")
        return A.Program(body=body)

    def parse_block_items(self, scope: _Scope, top_level: bool = False) -> list[A.Stmt]:
        items: list[A.Stmt] = []
        while True:
            tok = self.peek()
            if tok.kind == "eof" or tok.text == "}":
                return items
            items.append(self.parse_stmt(scope, top_level))

    def parse_block(self, scope: _Scope) -> list[A.Stmt]:
        self.expect("{")
        inner = _Scope(scope)
        items = self.parse_block_items(inner)
        self.expect("}")
        return items

    # --- statements ---

    def parse_stmt(self, scope: _Scope, top_level: bool = False) -> A.Stmt:
        tok = self.peek()
        if tok.text == "propNodes":
            if not top_level:
                raise DslSyntaxError(self.filename, tok.line, tok.col, "property declarations must be top-level")
            return self.parse_prop_decl(scope)
        if tok.text == "cache":
            return self.parse_cache_decl(scope)
        if tok.text == "local":
            return self.parse_local_decl(scope)
        if tok.text == "Edge":
            return self.parse_edge_decl(scope)
        if tok.text == "fixSource":
            return self.parse_fix_source(scope)
        if tok.text == "forall":
            return self.parse_forall(scope)
        if tok.text == "while":
            return self.parse_while(scope)
        if tok.text == "if":
            return self.parse_if(scope)
        if tok.text == "<":
            return self.parse_reduction(scope)
        if tok.text == "g":
            return self.parse_g_stmt(scope)
        if tok.kind == "ident":
            return self.parse_assign_like(scope)
        raise DslSyntaxError(self.filename, tok.line, tok.col, f"unexpected {tok.text!r}")

    def parse_prop_decl(self, scope: _Scope) -> A.PropDecl:
        start = self.expect("propNodes")
        self.expect("<")
        self.expect("int")
        self.expect(">")
        name = self.expect_ident("property name")
        if scope.lookup(name.text):
            self.err_name(name, f"duplicate declaration of {name.text!r}")
        self.expect("=")
        tok = self.peek()
        if tok.text in ("INF", "NODE_ID"):
            self.next()
            init: int | str = tok.text
        else:
            init = self.parse_int_literal()
        self.expect(";")
        scope.define(name.text, "prop")
        self.prop_order.append(name.text)
        return A.PropDecl(name=name.text, init=init, pos=(start.line, start.col))

    def parse_int_literal(self) -> int:
        neg = bool(self.accept("-"))
        tok = self.peek()
        if tok.kind != "int":
            raise DslSyntaxError(self.filename, tok.line, tok.col, f"expected integer, found {tok.text!r}")
        self.next()
        return -int(tok.text) if neg else int(tok.text)

    def parse_cache_decl(self, scope: _Scope) -> A.CacheDecl:
        start = self.expect("cache")
        self.expect("<")
        self.expect("int")
        self.expect(">")
        name = self.expect_ident("cache name")
        if scope.lookup(name.text):
            self.err_name(name, f"duplicate declaration of {name.text!r}")
        self.expect(";")
        scope.define(name.text, "cache")
        return A.CacheDecl(name=name.text, pos=(start.line, start.col))

    def parse_local_decl(self, scope: _Scope) -> A.LocalDecl:
        start = self.expect("local")
        self.expect("int")
        name = self.expect_ident("variable name")
        if name.text in scope.names:
            self.err_name(name, f"duplicate declaration of {name.text!r}")
        self.expect("=")
        init = self.parse_arith(scope)
        self.expect(";")
        scope.define(name.text, "int")
        return A.LocalDecl(name=name.text, init=init, pos=(start.line, start.col))

    def parse_edge_decl(self, scope: _Scope) -> A.EdgeDecl:
        start = self.expect("Edge")
        name = self.expect_ident("edge variable name")
        if name.text in scope.names:
            self.err_name(name, f"duplicate declaration of {name.text!r}")
        self.expect("=")
        call = self.parse_edge_call(scope)
        self.expect(";")
        scope.define(name.text, "edge")
        return A.EdgeDecl(name=name.text, call=call, pos=(start.line, start.col))

    def parse_edge_call(self, scope: _Scope):
        g = self.expect("g")
        self.expect(".")
        fn = self.expect_ident("edge accessor")
        self.expect("(")
        if fn.text == "get_edge":
            v = self.parse_node_ref(scope)
            self.expect(",")
            nbr = self.parse_node_ref(scope)
            self.expect(")")
            return A.GetEdge(v=v, nbr=nbr, pos=(g.line, g.col))
        if fn.text == "get_edge_i":
            v = self.parse_node_ref(scope)
            self.expect(",")
            index = self.parse_arith(scope)
            self.expect(")")
            return A.GetEdgeI(v=v, index=index, pos=(g.line, g.col))
        raise DslSyntaxError(self.filename, fn.line, fn.col, f"unknown edge accessor g.{fn.text}")

    def parse_node_ref(self, scope: _Scope) -> A.VarRef:
        tok = self.expect_ident("node variable")
        kind = scope.lookup(tok.text)
        if kind is None:
            self.err_name(tok, f"unknown identifier {tok.text!r}")
        if kind != "node":
            self.err_name(tok, f"{tok.text!r} is not a node variable (it is a {kind})")
        return A.VarRef(name=tok.text, pos=(tok.line, tok.col))

    def parse_fix_source(self, scope: _Scope) -> A.FixSource:
        start = self.expect("fixSource")
        self.expect("(")
        vertex = self.parse_int_literal()
        self.expect(",")
        value = self.parse_int_literal()
        self.expect(")")
        self.expect(";")
        if not self.prop_order:
            raise DslNameError(
                self.filename, start.line, start.col, "fixSource needs a preceding property declaration"
            )
        return A.FixSource(vertex=vertex, value=value, prop=self.prop_order[-1], pos=(start.line, start.col))

    def parse_forall(self, scope: _Scope):
        start = self.expect("forall")
        parens = bool(self.accept("("))
        var = self.expect_ident("loop variable")
        self.expect("in")
        self.expect("g")
        self.expect(".")
        domain = self.expect_ident("iteration domain")
        self.expect("(")
        of_var = None
        if domain.text == "neighbors":
            of_var = self.parse_node_ref(scope)
        self.expect(")")
        if parens:
            self.expect(")")
        inner = _Scope(scope)
        inner.define(var.text, "node")
        self.expect("{")
        body = self.parse_block_items(inner)
        self.expect("}")
        pos = (start.line, start.col)
        if domain.text == "nodes":
            return A.ForAllNodes(var=var.text, body=body, pos=pos)
        if domain.text == "neighbors":
            return A.ForAllNeighbors(var=var.text, of=of_var.name, body=body, pos=pos)
        if domain.text == "reduction_frontier":
            return A.FrontierLoop(var=var.text, body=body, pos=pos)
        raise DslSyntaxError(self.filename, domain.line, domain.col, f"unknown domain g.{domain.text}()")

    def parse_while(self, scope: _Scope) -> A.WhileStmt:
        start = self.expect("while")
        self.expect("(")
        cond = self.parse_cond(scope)
        self.expect(")")
        # Idiom normalization: the loop is driven by frontier work remaining.
        if isinstance(cond, A.NotExpr) and isinstance(cond.operand, A.FrontierNonEmpty):
            cond = cond.operand
        body = self.parse_block(scope)
        return A.WhileStmt(cond=cond, body=body, pos=(start.line, start.col))

    def parse_if(self, scope: _Scope) -> A.IfStmt:
        start = self.expect("if")
        self.expect("(")
        cond = self.parse_cond(scope)
        self.expect(")")
        then = self.parse_block(scope)
        orelse: list[A.Stmt] = []
        if self.accept("else"):
            orelse = self.parse_block(scope)
        return A.IfStmt(cond=cond, then=then, orelse=orelse, pos=(start.line, start.col))

    def parse_reduction(self, scope: _Scope) -> A.ReductionStmt:
        start = self.expect("<")
        vtok = self.expect_ident("target vertex variable")
        kind = scope.lookup(vtok.text)
        if kind is None:
            self.err_name(vtok, f"unknown identifier {vtok.text!r}")
        if kind != "node":
            self.err_name(vtok, f"reduction target base {vtok.text!r} is not a node variable")
        self.expect(".")
        ptok = self.expect_ident("target property")
        if scope.lookup(ptok.text) != "prop":
            self.err_name(ptok, f"{ptok.text!r} is not a declared property")
        self.expect(">")
        self.expect("=")
        self.expect("<")
        red = self.parse_red_expr(scope)
        self.expect(">")
        self.expect(";")
        return A.ReductionStmt(
            target_prop=ptok.text,
            target_vertex=A.VarRef(name=vtok.text, pos=(vtok.line, vtok.col)),
            red=red,
            pos=(start.line, start.col),
        )

    def parse_red_expr(self, scope: _Scope) -> A.RedExpr:
        op_tok = self.expect_ident("reduction operator")
        if op_tok.text not in OP_NAMES:
            raise DslSyntaxError(
                self.filename, op_tok.line, op_tok.col,
                f"reduction operator must be one of {', '.join(OP_NAMES)}; found {op_tok.text!r}",
            )
        op = op_from_name(op_tok.text)
        pos = (op_tok.line, op_tok.col)
        if self.accept("("):
            args = [self.parse_arith(scope)]
            while self.accept(","):
                args.append(self.parse_arith(scope))
            self.expect(")")
            return A.OpCall(op=op, args=args, pos=pos)
        if self.accept("<"):
            inner = self.parse_red_expr(scope)
            self.expect(">")
            tail: list[A.Expr] = []
            while self.accept(","):
                tail.append(self.parse_arith(scope))
            return A.OpNested(op=op, inner=inner, tail=tail, pos=pos)
        tok = self.peek()
        raise DslSyntaxError(self.filename, tok.line, tok.col, "expected '(' or '<' after reduction operator")

    def parse_g_stmt(self, scope: _Scope) -> A.Stmt:
        g = self.expect("g")
        self.expect(".")
        fn = self.expect_ident("builtin")
        if fn.text == "sync_reduction":
            self.expect("(")
            self.expect(")")
            self.expect(";")
            return A.SyncReduction(props=(), pos=(g.line, g.col))
        raise DslSyntaxError(self.filename, fn.line, fn.col, f"unknown statement g.{fn.text}")

    def parse_assign_like(self, scope: _Scope) -> A.Stmt:
        name = self.expect_ident()
        kind = scope.lookup(name.text)
        pos = (name.line, name.col)
        if kind is None:
            self.err_name(name, f"unknown identifier {name.text!r}")
        if self.accept("++"):
            self.expect(";")
            if kind != "int":
                self.err_name(name, f"cannot increment {kind} variable {name.text!r}")
            return A.IncrStmt(name=name.text, pos=pos)
        if kind == "prop":
            # dist.local[v] = expr;
            self.expect(".")
            loc = self.expect_ident()
            if loc.text != "local":
                raise DslSyntaxError(self.filename, loc.line, loc.col, "property writes use prop.local[v] = ...")
            self.expect("[")
            vertex = self.parse_arith(scope)
            self.expect("]")
            self.expect("=")
            value = self.parse_arith(scope)
            self.expect(";")
            return A.LocalPropWrite(prop=name.text, vertex=vertex, value=value, pos=pos)
        if kind == "cache":
            if self.accept("."):
                fn = self.expect_ident()
                if fn.text != "clear":
                    raise DslSyntaxError(self.filename, fn.line, fn.col, "cache statements are clear() or [k] = v")
                self.expect("(")
                self.expect(")")
                self.expect(";")
                return A.CacheClear(cache=name.text, pos=pos)
            self.expect("[")
            key = self.parse_arith(scope)
            self.expect("]")
            self.expect("=")
            value = self.parse_arith(scope)
            self.expect(";")
            return A.CacheStore(cache=name.text, key=key, value=value, pos=pos)
        # plain variable assignment
        self.expect("=")
        if self.at("g"):
            save = self.i
            self.next()
            self.expect(".")
            fn = self.expect_ident("builtin")
            if fn.text == "all_finished":
                self.expect("(")
                arg = self.expect_ident()
                if arg.text != name.text:
                    self.err_name(arg, "all_finished must combine the assigned flag itself")
                self.expect(")")
                self.expect(";")
                if kind != "int":
                    self.err_name(name, "all_finished target must be a local int flag")
                return A.AllFinishedStmt(var=name.text, pos=pos)
            if fn.text == "get_edge_other":
                self.expect("(")
                v = self.parse_node_ref(scope)
                self.expect(",")
                etok = self.expect_ident("edge variable")
                if scope.lookup(etok.text) != "edge":
                    self.err_name(etok, f"{etok.text!r} is not an edge variable")
                self.expect(")")
                self.expect(";")
                if kind != "node":
                    self.err_name(name, "get_edge_other result must be assigned to a node variable")
                return A.AssignVar(
                    name=name.text,
                    value=A.GetEdgeOther(
                        v=v, edge=A.VarRef(name=etok.text, pos=(etok.line, etok.col)), pos=pos
                    ),
                    pos=pos,
                )
            self.i = save
        if kind != "int":
            self.err_name(name, f"cannot assign to {kind} variable {name.text!r}")
        value = self.parse_arith(scope)
        self.expect(";")
        return A.AssignVar(name=name.text, value=value, pos=pos)

    # --- expressions ---

    def parse_cond(self, scope: _Scope) -> A.Expr:
        if self.accept("!"):
            return A.NotExpr(operand=self.parse_cond_atom(scope))
        return self.parse_cmp(scope)

    def parse_cond_atom(self, scope: _Scope) -> A.Expr:
        # negation binds to a single atom (a frontier test, variable, or parenthesized cond)
        tok = self.peek()
        if tok.text == "(":
            self.next()
            inner = self.parse_cond(scope)
            self.expect(")")
            return inner
        return self.parse_atom(scope)

    def parse_cmp(self, scope: _Scope) -> A.Expr:
        left = self.parse_arith(scope)
        tok = self.peek()
        if tok.text in ("<", ">", "<=", ">=", "==", "!="):
            self.next()
            right = self.parse_arith(scope)
            return A.BinOp(op=tok.text, left=left, right=right, pos=(tok.line, tok.col))
        return left

    def parse_arith(self, scope: _Scope) -> A.Expr:
        left = self.parse_term(scope)
        while True:
            tok = self.peek()
            if tok.text in ("+", "-"):
                self.next()
                right = self.parse_term(scope)
                left = A.BinOp(op=tok.text, left=left, right=right, pos=(tok.line, tok.col))
            else:
                return left

    def parse_term(self, scope: _Scope) -> A.Expr:
        left = self.parse_atom(scope)
        while self.at("*"):
            tok = self.next()
            right = self.parse_atom(scope)
            left = A.BinOp(op="*", left=left, right=right, pos=(tok.line, tok.col))
        return left

    def parse_atom(self, scope: _Scope) -> A.Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return A.IntLit(value=int(tok.text), pos=(tok.line, tok.col))
        if tok.text == "-":
            self.next()
            inner = self.parse_atom(scope)
            return A.BinOp(op="-", left=A.IntLit(value=0), right=inner, pos=(tok.line, tok.col))
        if tok.text == "(":
            self.next()
            inner = self.parse_arith(scope)
            self.expect(")")
            return inner
        if tok.text == "INF":
            self.next()
            from graphpulse.ops import INF

            return A.IntLit(value=INF, pos=(tok.line, tok.col))
        if tok.text == "g":
            return self.parse_g_expr(scope)
        if tok.kind != "ident":
            raise DslSyntaxError(self.filename, tok.line, tok.col, f"expected expression, found {tok.text!r}")
        return self.parse_ident_expr(scope)

    def parse_g_expr(self, scope: _Scope) -> A.Expr:
        g = self.expect("g")
        self.expect(".")
        fn = self.expect_ident("builtin")
        pos = (g.line, g.col)
        if fn.text == "reduction_frontier":
            self.expect("(")
            self.expect(")")
            return A.FrontierNonEmpty(pos=pos)
        if fn.text == "is_local":
            self.expect("(")
            v = self.parse_node_ref(scope)
            self.expect(")")
            return A.IsLocal(vertex=v, pos=pos)
        raise DslSyntaxError(self.filename, fn.line, fn.col, f"unknown expression g.{fn.text}")

    def parse_ident_expr(self, scope: _Scope) -> A.Expr:
        name = self.expect_ident()
        kind = scope.lookup(name.text)
        pos = (name.line, name.col)
        if kind is None:
            if name.text in OP_NAMES:
                self.err_name(
                    name,
                    f"reduction operator {name.text} is only valid inside the "
                    f"angle-bracket form <t.p> = <{name.text}(...)>;",
                )
            self.err_name(name, f"unknown identifier {name.text!r}")
        if kind == "prop":
            # prop.local[v]
            self.expect(".")
            loc = self.expect_ident()
            if loc.text != "local":
                raise DslSyntaxError(self.filename, loc.line, loc.col, "property reads use v.prop or prop.local[v]")
            self.expect("[")
            vertex = self.parse_arith(scope)
            self.expect("]")
            return A.LocalPropRead(prop=name.text, vertex=vertex, pos=pos)
        if kind == "cache":
            if self.accept("."):
                fn = self.expect_ident()
                if fn.text != "has":
                    raise DslSyntaxError(self.filename, fn.line, fn.col, "cache expressions are has(k) or [k]")
                self.expect("(")
                key = self.parse_arith(scope)
                self.expect(")")
                return A.CacheHas(cache=name.text, key=key, pos=pos)
            self.expect("[")
            key = self.parse_arith(scope)
            self.expect("]")
            return A.CacheRead(cache=name.text, key=key, pos=pos)
        if kind == "node":
            if self.accept("."):
                ptok = self.expect_ident("property name")
                if scope.lookup(ptok.text) != "prop":
                    self.err_name(ptok, f"{ptok.text!r} is not a declared property")
                return A.PropRead(prop=ptok.text, vertex=A.VarRef(name=name.text, pos=pos), pos=pos)
            return A.VarRef(name=name.text, pos=pos)
        if kind == "edge":
            self.expect(".")
            field_tok = self.expect_ident()
            if field_tok.text != "weight":
                raise DslSyntaxError(
                    self.filename, field_tok.line, field_tok.col, "edges expose only .weight"
                )
            return A.EdgeWeight(edge=A.VarRef(name=name.text, pos=pos), pos=pos)
        # int variable
        return A.VarRef(name=name.text, pos=pos)


def parse(source: str, filename: str = "<input>") -> A.Program:
    return Parser(source, filename).parse_program()


def parse_file(path: str) -> A.Program:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read(), filename=path)
