"""Minimal lambda-Pi-modulo typechecker for the emitted module subset.

Supports dependent products, beta conversion, definition unfolding and
first-order left-linear rewrite rules with constant heads; exactly what the
proof prelude requires.  A fuel bound turns runaway rewriting into an error.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .dedukti import (
    LpApp, LpConst, LpDef, LpLam, LpModule, LpPi, LpRule, LpSort, LpTerm,
    LpVar, SORT, spine,
)


class LpSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class ScopeError(Exception):
    pass


class LpTypeError(Exception):
    pass


class FuelExhausted(Exception):
    pass


# ---------------------------------------------------------------------------
# Lexing and parsing

_TOKEN_RE = re.compile(
    r"""(?P<comment>\(;.*?;\))
      | (?P<ws>\s+)
      | (?P<directive>\#[A-Za-z]+)
      | (?P<ident>[A-Za-z0-9_]+)
      | (?P<sym>-->|->|:=|=>|[:.(),\[\]])
    """, re.VERBOSE | re.DOTALL)


def _tokenize(text: str) -> list[tuple[str, str, int, int]]:
    toks = []
    pos = 0
    line, col = 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LpSyntaxError(f"unexpected character {text[pos]!r}",
                                line, col)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            toks.append((kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, toks: list[tuple[str, str, int, int]]):
        self.toks = toks
        self.i = 0

    def _peek(self, ahead: int = 0) -> Optional[tuple[str, str, int, int]]:
        j = self.i + ahead
        return self.toks[j] if j < len(self.toks) else None

    def _next(self) -> tuple[str, str, int, int]:
        tok = self._peek()
        if tok is None:
            last = self.toks[-1] if self.toks else ("", "", 1, 1)
            raise LpSyntaxError("unexpected end of input", last[2], last[3])
        self.i += 1
        return tok

    def _expect(self, value: str) -> tuple[str, str, int, int]:
        tok = self._next()
        if tok[1] != value:
            raise LpSyntaxError(f"expected {value!r}, got {tok[1]!r}",
                                tok[2], tok[3])
        return tok

    def _ident(self) -> str:
        tok = self._next()
        if tok[0] != "ident":
            raise LpSyntaxError(f"expected identifier, got {tok[1]!r}",
                                tok[2], tok[3])
        return tok[1]

    def atom(self) -> LpTerm:
        tok = self._next()
        if tok[1] == "(":
            t = self.term()
            self._expect(")")
            return t
        if tok[0] == "ident":
            return SORT if tok[1] == "Type" else LpVar(tok[1])
        raise LpSyntaxError(f"unexpected token {tok[1]!r}", tok[2], tok[3])

    def app(self) -> LpTerm:
        t = self.atom()
        while True:
            nxt = self._peek()
            if nxt is None or not (nxt[0] == "ident" or nxt[1] == "("):
                return t
            t = LpApp(t, self.atom())

    def term(self) -> LpTerm:
        nxt, after = self._peek(), self._peek(1)
        if (nxt is not None and nxt[0] == "ident" and nxt[1] != "Type"
                and after is not None and after[1] == ":"):
            name = self._ident()
            self._expect(":")
            ann = self.app()
            tok = self._next()
            if tok[1] == "->":
                return LpPi(name, ann, self.term())
            if tok[1] == "=>":
                return LpLam(name, ann, self.term())
            raise LpSyntaxError("expected -> or => after binder annotation",
                                tok[2], tok[3])
        left = self.app()
        nxt = self._peek()
        if nxt is not None and nxt[1] == "->":
            self._next()
            return LpPi(None, left, self.term())
        return left

    def module(self) -> LpModule:
        name = "main"
        deps: list[str] = []
        decls: list = []
        while self._peek() is not None:
            tok = self._peek()
            if tok[0] == "directive":
                self._next()
                ident = self._ident()
                self._expect(".")
                if tok[1] == "#NAME":
                    name = ident
                elif tok[1] == "#REQUIRE":
                    deps.append(ident)
                else:
                    raise LpSyntaxError(f"unknown directive {tok[1]}",
                                        tok[2], tok[3])
                continue
            if tok[1] == "[":
                self._next()
                ctx: list[str] = []
                if self._peek() is not None and self._peek()[1] != "]":
                    ctx.append(self._ident())
                    while self._peek() is not None and self._peek()[1] == ",":
                        self._next()
                        ctx.append(self._ident())
                self._expect("]")
                lhs = self.app()
                self._expect("-->")
                rhs = self.term()
                self._expect(".")
                decls.append(LpRule(tuple(ctx), lhs, rhs))
                continue
            if tok[1] == "def":
                self._next()
                ident = self._ident()
                self._expect(":")
                ty = self.term()
                self._expect(":=")
                body = self.term()
                self._expect(".")
                decls.append(LpDef(ident, ty, body))
                continue
            ident = self._ident()
            self._expect(":")
            ty = self.term()
            self._expect(".")
            decls.append(LpConst(ident, ty))
        return LpModule(name, tuple(deps), tuple(decls))


def parse_module(text: str) -> LpModule:
    return _Parser(_tokenize(text)).module()


# ---------------------------------------------------------------------------
# Terms: free variables and substitution

class _Kind:
    """The sort of `Type` itself; never written, only inferred."""

    def __repr__(self) -> str:
        return "Kind"


KIND = _Kind()


def _fv(t: LpTerm) -> set[str]:
    if isinstance(t, LpVar):
        return {t.name}
    if isinstance(t, LpApp):
        return _fv(t.fun) | _fv(t.arg)
    if isinstance(t, LpLam):
        return _fv(t.ann) | (_fv(t.body) - {t.name})
    if isinstance(t, LpPi):
        inner = _fv(t.cod)
        if t.name is not None:
            inner -= {t.name}
        return _fv(t.dom) | inner
    return set()


_fresh_counter = 0


def _fresh(base: str) -> str:
    global _fresh_counter
    _fresh_counter += 1
    return f"_r{_fresh_counter}"


def lp_subst(t: LpTerm, sub: dict[str, LpTerm]) -> LpTerm:
    if not sub:
        return t
    if isinstance(t, LpVar):
        return sub.get(t.name, t)
    if isinstance(t, LpSort):
        return t
    if isinstance(t, LpApp):
        return LpApp(lp_subst(t.fun, sub), lp_subst(t.arg, sub))
    if isinstance(t, LpLam):
        name, body, inner = _under_binder(t.name, t.body, sub)
        return LpLam(name, lp_subst(t.ann, sub), lp_subst(body, inner))
    if t.name is None:
        return LpPi(None, lp_subst(t.dom, sub), lp_subst(t.cod, sub))
    name, cod, inner = _under_binder(t.name, t.cod, sub)
    return LpPi(name, lp_subst(t.dom, sub), lp_subst(cod, inner))


def _under_binder(name: str, body: LpTerm, sub: dict[str, LpTerm]):
    inner = {k: v for k, v in sub.items() if k != name}
    if not inner:
        return name, body, inner
    if any(name in _fv(v) for v in inner.values()):
        renamed = _fresh(name)
        body = lp_subst(body, {name: LpVar(renamed)})
        return renamed, body, inner
    return name, body, inner


# ---------------------------------------------------------------------------
# Signature and checking

@dataclass
class Signature:
    decls: dict[str, tuple[LpTerm, Optional[LpTerm]]] = field(
        default_factory=dict)
    rules: dict[str, list[LpRule]] = field(default_factory=dict)

    def install(self, d) -> None:
        if isinstance(d, LpConst):
            self.decls[d.name] = (d.ty, None)
        elif isinstance(d, LpDef):
            self.decls[d.name] = (d.ty, d.body)
        else:
            head, _ = spine(d.lhs)
            if not isinstance(head, LpVar):
                raise LpTypeError("rewrite rule head must be a constant")
            self.rules.setdefault(head.name, []).append(d)


class Checker:
    def __init__(self, sig: Signature, fuel: int = 1_000_000):
        self.sig = sig
        self.max_fuel = fuel
        self.fuel = fuel

    def reset_fuel(self) -> None:
        self.fuel = self.max_fuel

    def _burn(self) -> None:
        self.fuel -= 1
        if self.fuel <= 0:
            raise FuelExhausted("conversion exceeded the step budget")

    # -- reduction ------------------------------------------------------------

    def whnf(self, t: LpTerm) -> LpTerm:
        stack: list[LpTerm] = []
        while True:
            if isinstance(t, LpApp):
                stack.append(t.arg)
                t = t.fun
                continue
            if isinstance(t, LpLam) and stack:
                self._burn()
                t = lp_subst(t.body, {t.name: stack.pop()})
                continue
            if isinstance(t, LpVar):
                entry = self.sig.decls.get(t.name)
                if entry is not None and entry[1] is not None:
                    self._burn()
                    t = entry[1]
                    continue
                rules = self.sig.rules.get(t.name)
                if rules:
                    stepped = False
                    for rule in rules:
                        _, pats = spine(rule.lhs)
                        if len(stack) < len(pats):
                            continue
                        binding: dict[str, LpTerm] = {}
                        subject = stack[len(stack) - len(pats):]
                        subject.reverse()
                        if all(self._match(p, s, set(rule.ctx), binding)
                               for p, s in zip(pats, subject)):
                            self._burn()
                            del stack[len(stack) - len(pats):]
                            t = lp_subst(rule.rhs, binding)
                            stepped = True
                            break
                    if stepped:
                        continue
            while stack:
                t = LpApp(t, stack.pop())
            return t

    def _match(self, pat: LpTerm, subj: LpTerm, ctx: set[str],
               binding: dict[str, LpTerm]) -> bool:
        if isinstance(pat, LpVar) and pat.name in ctx:
            seen = binding.get(pat.name)
            if seen is None:
                binding[pat.name] = subj
                return True
            return self.convertible(seen, subj)
        s = self.whnf(subj)
        if isinstance(pat, LpVar):
            return isinstance(s, LpVar) and s.name == pat.name
        if isinstance(pat, LpApp):
            return (isinstance(s, LpApp)
                    and self._match(pat.fun, s.fun, ctx, binding)
                    and self._match(pat.arg, s.arg, ctx, binding))
        return False

    # -- conversion -------------------------------------------------------------

    def convertible(self, a, b) -> bool:
        if a is b:
            return True
        if a is KIND or b is KIND:
            return a is KIND and b is KIND
        a = self.whnf(a)
        b = self.whnf(b)
        if isinstance(a, LpSort) or isinstance(b, LpSort):
            return isinstance(a, LpSort) and isinstance(b, LpSort)
        if isinstance(a, LpLam) and isinstance(b, LpLam):
            v = LpVar(_fresh("x"))
            return (self.convertible(a.ann, b.ann)
                    and self.convertible(
                        lp_subst(a.body, {a.name: v}),
                        lp_subst(b.body, {b.name: v})))
        if isinstance(a, LpPi) and isinstance(b, LpPi):
            if not self.convertible(a.dom, b.dom):
                return False
            v = LpVar(_fresh("x"))
            ca = lp_subst(a.cod, {a.name: v}) if a.name is not None else a.cod
            cb = lp_subst(b.cod, {b.name: v}) if b.name is not None else b.cod
            return self.convertible(ca, cb)
        ha, argsa = spine(a)
        hb, argsb = spine(b)
        if (isinstance(ha, LpVar) and isinstance(hb, LpVar)
                and ha.name == hb.name and len(argsa) == len(argsb)):
            return all(self.convertible(x, y)
                       for x, y in zip(argsa, argsb))
        return False

    # -- typing -----------------------------------------------------------------

    def infer(self, t: LpTerm, locals_: dict[str, LpTerm]):
        if isinstance(t, LpSort):
            return KIND
        if isinstance(t, LpVar):
            got = locals_.get(t.name)
            if got is not None:
                return got
            entry = self.sig.decls.get(t.name)
            if entry is None:
                raise ScopeError(f"undeclared identifier {t.name}")
            return entry[0]
        if isinstance(t, LpApp):
            fty = self.whnf(self.infer(t.fun, locals_))
            if not isinstance(fty, LpPi):
                raise LpTypeError("application of a non-function")
            self.check(t.arg, fty.dom, locals_)
            if fty.name is None:
                return fty.cod
            return lp_subst(fty.cod, {fty.name: t.arg})
        if isinstance(t, LpLam):
            s = self.infer(t.ann, locals_)
            if not (s is KIND or isinstance(self.whnf(s), LpSort)):
                raise LpTypeError("lambda annotation is not a type")
            inner = dict(locals_)
            inner[t.name] = t.ann
            return LpPi(t.name, t.ann, self.infer(t.body, inner))
        # Pi
        s1 = self.infer(t.dom, locals_)
        if not (s1 is KIND or isinstance(self.whnf(s1), LpSort)):
            raise LpTypeError("product domain is not a type")
        inner = dict(locals_)
        if t.name is not None:
            inner[t.name] = t.dom
        s2 = self.infer(t.cod, inner)
        if s2 is KIND:
            return KIND
        if isinstance(self.whnf(s2), LpSort):
            return SORT
        raise LpTypeError("product codomain is not a type")

    def check(self, t: LpTerm, ty, locals_: dict[str, LpTerm]) -> None:
        got = self.infer(t, locals_)
        if not self.convertible(got, ty):
            raise LpTypeError("term does not have the expected type")


# ---------------------------------------------------------------------------
# Module-level checking

@dataclass
class CheckReport:
    module: str
    entries: list[dict]
    seconds: float

    @property
    def ok(self) -> bool:
        return all(e["ok"] for e in self.entries)

    def to_dict(self) -> dict:
        return {"module": self.module, "ok": self.ok,
                "seconds": self.seconds, "declarations": self.entries}


def _rule_pattern_types(checker: Checker, rule: LpRule) -> dict[str, LpTerm]:
    """Infer pattern-variable types from their positions under constants."""
    want: dict[str, LpTerm] = {}
    ctx = set(rule.ctx)

    def walk(t: LpTerm, expected: Optional[LpTerm]) -> None:
        if isinstance(t, LpVar) and t.name in ctx:
            if expected is not None:
                want.setdefault(t.name, expected)
            return
        if isinstance(t, LpApp):
            head, args = spine(t)
            if not isinstance(head, LpVar):
                raise LpTypeError("rewrite pattern head must be a constant")
            entry = checker.sig.decls.get(head.name)
            if entry is None:
                raise ScopeError(f"undeclared identifier {head.name}")
            cur = entry[0]
            for a in args:
                cur = checker.whnf(cur)
                if not isinstance(cur, LpPi):
                    raise LpTypeError("over-applied rewrite pattern")
                walk(a, cur.dom)
                cur = (lp_subst(cur.cod, {cur.name: a})
                       if cur.name is not None else cur.cod)

    walk(rule.lhs, None)
    missing = ctx - set(want)
    if missing:
        raise LpTypeError(
            f"cannot infer types for rule variables {sorted(missing)}")
    return want


def typecheck(module: LpModule, deps: Sequence[LpModule] = (),
              fuel: int = 1_000_000) -> CheckReport:
    """Check every declaration in order; dependencies are installed unchecked
    (they carry their own reports)."""
    sig = Signature()
    for dep in deps:
        for d in dep.declarations:
            sig.install(d)
    checker = Checker(sig, fuel=fuel)
    entries: list[dict] = []
    start = time.monotonic()
    for d in module.declarations:
        checker.reset_fuel()
        label = d.name if not isinstance(d, LpRule) else "<rule>"
        try:
            if isinstance(d, LpConst):
                s = checker.infer(d.ty, {})
                if not (s is KIND or isinstance(checker.whnf(s), LpSort)):
                    raise LpTypeError("declaration type is not well-sorted")
            elif isinstance(d, LpDef):
                s = checker.infer(d.ty, {})
                if not (s is KIND or isinstance(checker.whnf(s), LpSort)):
                    raise LpTypeError("definition type is not well-sorted")
                checker.check(d.body, d.ty, {})
            else:
                pat_types = _rule_pattern_types(checker, d)
                lhs_ty = checker.infer(d.lhs, pat_types)
                rhs_ty = checker.infer(d.rhs, pat_types)
                if not checker.convertible(lhs_ty, rhs_ty):
                    raise LpTypeError("rewrite rule changes the type")
            entries.append({"name": label, "ok": True, "message": ""})
        except (LpTypeError, ScopeError, FuelExhausted) as e:
            entries.append({"name": label, "ok": False, "message": str(e)})
        sig.install(d)
    return CheckReport(module.name, entries, time.monotonic() - start)


def check_modules(modules: Sequence[LpModule],
                  fuel: int = 1_000_000) -> list[CheckReport]:
    """Check modules in order, each seeing the ones before it."""
    reports = []
    for i, mod in enumerate(modules):
        reports.append(typecheck(mod, deps=modules[:i], fuel=fuel))
    return reports
