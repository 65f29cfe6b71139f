"""Reader, stack machine and serializer for proof article files.

An article is a line-oriented program: one command per line, `#` comments,
integer literals, quoted namespaced names, and word opcodes.  Replaying an
article drives the kernel and yields exported theorems, recorded assumptions
and the proof trace.  `emit_article` is the inverse direction: it serializes
a replay result back into canonical article text at a chosen format version,
expanding rules the target version lacks.
"""

from __future__ import annotations

import gzip
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .kernel import (
    Abs, App, Const, HolTerm, HolType, Kernel, KernelError, Name, Substitution,
    Theorem, TyApp, TyVar, Var, alpha_equal, alpha_key, derive_prove_hyp,
    derive_sym, derive_trans, derive_type_op_eta, derive_type_op_plain,
    dest_eq, free_vars, type_match, type_of,
)


class ArticleError(Exception):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.line = line


class UnknownCommand(ArticleError):
    pass


class BadQuote(ArticleError):
    pass


class StackUnderflow(ArticleError):
    pass


class ShapeError(ArticleError):
    pass


class VersionError(ArticleError):
    pass


class NonEmptyFinalStack(ArticleError):
    pass


class ExportMismatch(ArticleError):
    pass


# ---------------------------------------------------------------------------
# Commands

OPCODES = frozenset({
    "absTerm", "absThm", "appTerm", "appThm", "assume", "axiom", "betaConv",
    "cons", "const", "constTerm", "deductAntisym", "def", "defineConst",
    "defineConstList", "defineTypeOp", "eqMp", "hdTl", "nil", "opType", "pop",
    "pragma", "proveHyp", "ref", "refl", "remove", "subst", "sym", "thm",
    "trans", "typeOp", "var", "varTerm", "varType", "version",
})

V6_ONLY = frozenset({
    "defineConstList", "hdTl", "pragma", "proveHyp", "sym", "trans", "version",
})

# (pops, pushes) per opcode; `def` pops its key and leaves the stored object.
ARITY: dict[str, tuple[int, int]] = {
    "absTerm": (2, 1), "absThm": (2, 1), "appTerm": (2, 1), "appThm": (2, 1),
    "assume": (1, 1), "axiom": (2, 1), "betaConv": (1, 1), "cons": (2, 1),
    "const": (1, 1), "constTerm": (2, 1), "deductAntisym": (2, 1),
    "def": (1, 0), "defineConst": (2, 2), "defineConstList": (2, 2),
    "defineTypeOp": (5, 5), "eqMp": (2, 1), "hdTl": (1, 2), "nil": (0, 1),
    "opType": (2, 1), "pop": (1, 0), "pragma": (1, 0), "proveHyp": (2, 1),
    "ref": (1, 1), "refl": (1, 1), "remove": (1, 1), "subst": (2, 1),
    "sym": (1, 1), "thm": (3, 0), "trans": (2, 1), "typeOp": (1, 1),
    "var": (2, 1), "varTerm": (1, 1), "varType": (1, 1), "version": (1, 0),
    "num": (0, 1), "name": (0, 1),
}

Command = tuple[str, object]  # ("num", int) | ("name", Name) | ("op", str)

_NUM_RE = re.compile(r"^[+-]?[0-9]+$")


def parse_name(text: str, line: Optional[int] = None) -> Name:
    """Parse the inside of a quoted name: `\\` escapes the next character,
    unescaped `.` separates namespace components."""
    parts: list[str] = []
    cur: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            if i + 1 >= len(text):
                raise BadQuote("dangling escape in name", line)
            cur.append(text[i + 1])
            i += 2
        elif ch == ".":
            parts.append("".join(cur))
            cur = []
            i += 1
        else:
            cur.append(ch)
            i += 1
    parts.append("".join(cur))
    return Name(tuple(parts[:-1]), parts[-1])


def quote_name(n: Name) -> str:
    def esc(part: str) -> str:
        return part.replace("\\", "\\\\").replace('"', '\\"').replace(".", "\\.")

    return '"' + ".".join(esc(p) for p in n.components + (n.base,)) + '"'


def parse_line(raw: str, line: Optional[int] = None) -> Optional[Command]:
    """One line -> command, or None for blanks and `#` comments."""
    text = raw.strip()
    if not text or text.startswith("#"):
        return None
    if text.startswith('"'):
        if len(text) < 2 or not text.endswith('"'):
            raise BadQuote("unterminated quoted name", line)
        body = text[1:-1]
        # a trailing backslash would escape the closing quote
        trailing = len(body) - len(body.rstrip("\\"))
        if trailing % 2 == 1:
            raise BadQuote("unterminated quoted name", line)
        return ("name", parse_name(body, line))
    if _NUM_RE.match(text):
        return ("num", int(text))
    if text in OPCODES:
        return ("op", text)
    raise UnknownCommand(f"unknown command {text!r}", line)


# ---------------------------------------------------------------------------
# Stack objects

@dataclass(frozen=True)
class ONum:
    value: int


@dataclass(frozen=True)
class OName:
    value: Name


@dataclass(frozen=True)
class OList:
    items: tuple


@dataclass(frozen=True)
class OTypeOp:
    name: Name


@dataclass(frozen=True)
class OType:
    ty: HolType


@dataclass(frozen=True)
class OConst:
    name: Name


@dataclass(frozen=True)
class OVar:
    var: Var


@dataclass(frozen=True)
class OTerm:
    term: HolTerm


@dataclass(frozen=True)
class OThm:
    thm: Theorem


StackObject = Union[ONum, OName, OList, OTypeOp, OType, OConst, OVar, OTerm, OThm]


@dataclass
class Export:
    hint: str
    theorem: Theorem


@dataclass
class ArticleResult:
    exports: list[Export]
    assumptions: list[Theorem]
    trace: object
    command_counts: dict[str, int]
    version: int
    kernel: Kernel
    warnings: list[str] = field(default_factory=list)


def _as_term(obj, what: str) -> HolTerm:
    if not isinstance(obj, OTerm):
        raise ShapeError(f"expected {what}, got {type(obj).__name__}")
    return obj.term


def _as_type(obj, what: str) -> HolType:
    if not isinstance(obj, OType):
        raise ShapeError(f"expected {what}, got {type(obj).__name__}")
    return obj.ty


def _as_name(obj, what: str) -> Name:
    if not isinstance(obj, OName):
        raise ShapeError(f"expected {what}, got {type(obj).__name__}")
    return obj.value


def _as_list(obj, what: str) -> tuple:
    if not isinstance(obj, OList):
        raise ShapeError(f"expected {what}, got {type(obj).__name__}")
    return obj.items


def _brief(obj: StackObject) -> str:
    if isinstance(obj, (OName, ONum)):
        return str(obj.value)
    return type(obj).__name__


# ---------------------------------------------------------------------------
# The machine

class Machine:
    """Stack interpreter over a fresh kernel.

    `version_mode` of None follows the article's own declaration (version 5
    unless a leading `6 version` appears); 5 or 6 forces the mode.
    """

    def __init__(self, version_mode: Optional[int] = None):
        if version_mode not in (None, 5, 6):
            raise VersionError(f"unsupported version mode {version_mode}")
        self.forced = version_mode
        self.version = version_mode or 5
        self.kernel = Kernel(version=self.version)
        self.stack: list[StackObject] = []
        self.dictionary: dict[int, StackObject] = {}
        self.exports: list[Export] = []
        self.command_counts: dict[str, int] = {}
        self.executed = 0
        self.version_declared = False
        self.external_type_ops: dict[Name, int] = {}

    # stack helpers -----------------------------------------------------------

    def _pop(self) -> StackObject:
        if not self.stack:
            raise StackUnderflow("stack underflow")
        return self.stack.pop()

    def _pop_as(self, cls, what: str):
        obj = self._pop()
        if not isinstance(obj, cls):
            raise ShapeError(f"expected {what}, got {type(obj).__name__}")
        return obj

    def _pop_num(self) -> int:
        return self._pop_as(ONum, "a number").value

    def _pop_name(self) -> Name:
        return self._pop_as(OName, "a name").value

    def _pop_list(self) -> tuple:
        return self._pop_as(OList, "a list").items

    def _pop_type(self) -> HolType:
        return self._pop_as(OType, "a type").ty

    def _pop_term(self) -> HolTerm:
        return self._pop_as(OTerm, "a term").term

    def _pop_var(self) -> Var:
        return self._pop_as(OVar, "a variable").var

    def _pop_thm(self) -> Theorem:
        return self._pop_as(OThm, "a theorem").thm

    def _push(self, obj: StackObject) -> None:
        self.stack.append(obj)

    # command execution -------------------------------------------------------

    def execute(self, cmd: Command) -> None:
        kind, payload = cmd
        if kind == "num":
            self._push(ONum(payload))
            self._count("num")
            return
        if kind == "name":
            self._push(OName(payload))
            self._count("name")
            return
        op = payload
        if op in V6_ONLY and op != "version" and self.version != 6:
            raise VersionError(f"{op} requires a version-6 article")
        _HANDLERS[op](self)
        self._count(op)

    def _count(self, key: str) -> None:
        self.command_counts[key] = self.command_counts.get(key, 0) + 1
        self.executed += 1

    # individual opcodes (pop order: top of stack first) ------------------------

    def _op_abs_term(self) -> None:
        body = self._pop_term()
        v = self._pop_var()
        self._push(OTerm(Abs(v, body)))

    def _op_abs_thm(self) -> None:
        d = self._pop_thm()
        v = self._pop_var()
        self._push(OThm(self.kernel.abs_thm(v, d)))

    def _op_app_term(self) -> None:
        x = self._pop_term()
        f = self._pop_term()
        try:
            t = App(f, x)
            type_of(t)
        except KernelError as e:
            raise ShapeError(f"appTerm: {e}") from e
        self._push(OTerm(t))

    def _op_app_thm(self) -> None:
        d2 = self._pop_thm()
        d1 = self._pop_thm()
        self._push(OThm(self.kernel.app_thm(d1, d2)))

    def _op_assume(self) -> None:
        self._push(OThm(self.kernel.assume(self._pop_term())))

    def _op_axiom(self) -> None:
        concl = self._pop_term()
        hyps = tuple(_as_term(h, "axiom hypothesis") for h in self._pop_list())
        self._push(OThm(self.kernel.axiom(hyps, concl)))

    def _op_beta_conv(self) -> None:
        self._push(OThm(self.kernel.beta_conv(self._pop_term())))

    def _op_cons(self) -> None:
        tail = self._pop_list()
        head = self._pop()
        self._push(OList((head,) + tail))

    def _op_const(self) -> None:
        self._push(OConst(self._pop_name()))

    def _op_const_term(self) -> None:
        ty = self._pop_type()
        c = self._pop_as(OConst, "a constant")
        generic = self.kernel.constants.get(c.name)
        if generic is not None and not type_match(generic, ty, {}):
            raise ShapeError(f"constTerm: type is not an instance of {c.name}'s type")
        self._push(OTerm(Const(c.name, ty)))

    def _op_deduct_antisym(self) -> None:
        d2 = self._pop_thm()
        d1 = self._pop_thm()
        self._push(OThm(self.kernel.deduct_antisym(d1, d2)))

    def _op_def(self) -> None:
        k = self._pop_num()
        if not self.stack:
            raise StackUnderflow("def with empty stack")
        self.dictionary[k] = self.stack[-1]

    def _op_define_const(self) -> None:
        t = self._pop_term()
        n = self._pop_name()
        c, thm = self.kernel.define_const(n, t)
        self._push(OConst(c.name))
        self._push(OThm(thm))

    def _op_define_const_list(self) -> None:
        d = self._pop_thm()
        pairs = self._pop_list()
        spec: list[tuple[Name, Var]] = []
        for p in pairs:
            if not (isinstance(p, OList) and len(p.items) == 2
                    and isinstance(p.items[0], OName) and isinstance(p.items[1], OVar)):
                raise ShapeError("defineConstList: expected (name, var) pairs")
            spec.append((p.items[0].value, p.items[1].var))
        consts, thm = self._define_const_list(spec, d)
        self._push(OList(tuple(OConst(c.name) for c in consts)))
        self._push(OThm(thm))

    def _define_const_list(self, spec: list[tuple[Name, Var]],
                           d: Theorem) -> tuple[list[Const], Theorem]:
        """Desugar into single definitions plus hypothesis discharge, so the
        trace only ever contains core rules."""
        k = self.kernel
        hyp_by_var: dict[tuple, HolTerm] = {}
        for h in d.hyps:
            eq = dest_eq(h)
            if eq is not None and isinstance(eq[0], Var):
                hyp_by_var[alpha_key(eq[0])] = h
        vars_given = {v for _, v in spec}
        if len(vars_given) != len(spec):
            raise ShapeError("defineConstList: repeated variable")
        consts: list[Const] = []
        def_thms: list[Theorem] = []
        for n, v in spec:
            h = hyp_by_var.get(alpha_key(v))
            if h is None:
                raise ShapeError(f"defineConstList: no hypothesis defines {v.name}")
            _, body, _ = dest_eq(h)
            if free_vars(body) & vars_given:
                raise ShapeError("defineConstList: definition body mentions a defined variable")
            c, thm = k.define_const(n, body)
            consts.append(c)
            def_thms.append(thm)
        if len(d.hyps) != len(spec):
            raise ShapeError("defineConstList: hypotheses are not exactly the definitions")
        sub = Substitution(ty_map=(), tm_map=tuple(
            (v, Const(c.name, v.ty)) for (_, v), c in zip(spec, consts)))
        cur = k.subst(sub, d)
        for thm in def_thms:
            cur = k.prove_hyp(thm, cur)
        if cur.hyps:
            raise ShapeError("defineConstList: hypotheses not fully discharged")
        return consts, cur

    def _op_define_type_op(self) -> None:
        d = self._pop_thm()
        ty_vars = tuple(_as_name(x, "type variable") for x in self._pop_list())
        rep_n = self._pop_name()
        abs_n = self._pop_name()
        op_n = self._pop_name()
        _, abs_c, rep_c, abs_thm, rep_thm = self.kernel.define_type_op(
            op_n, abs_n, rep_n, ty_vars, d)
        self._push(OTypeOp(op_n))
        self._push(OConst(abs_c.name))
        self._push(OConst(rep_c.name))
        self._push(OThm(abs_thm))
        self._push(OThm(rep_thm))

    def _op_eq_mp(self) -> None:
        d2 = self._pop_thm()
        d1 = self._pop_thm()
        self._push(OThm(self.kernel.eq_mp(d1, d2)))

    def _op_hd_tl(self) -> None:
        items = self._pop_list()
        if not items:
            raise ShapeError("hdTl on an empty list")
        self._push(items[0])
        self._push(OList(items[1:]))

    def _op_nil(self) -> None:
        self._push(OList(()))

    def _op_op_type(self) -> None:
        args = tuple(_as_type(a, "type argument") for a in self._pop_list())
        op = self._pop_as(OTypeOp, "a type operator")
        arity = self.kernel.type_ops.get(op.name, self.external_type_ops.get(op.name))
        if arity is None:
            self.external_type_ops[op.name] = len(args)
        elif arity != len(args):
            raise ShapeError(f"opType: {op.name} applied to {len(args)} args, arity {arity}")
        self._push(OType(TyApp(op.name, args)))

    def _op_pop(self) -> None:
        self._pop()

    def _op_pragma(self) -> None:
        obj = self._pop()
        self.kernel.trace.annotate(_brief(obj))

    def _op_prove_hyp(self) -> None:
        d2 = self._pop_thm()
        d1 = self._pop_thm()
        self._push(OThm(self.kernel.prove_hyp(d1, d2)))

    def _op_ref(self) -> None:
        k = self._pop_num()
        if k not in self.dictionary:
            raise ShapeError(f"ref: no dictionary entry {k}")
        self._push(self.dictionary[k])

    def _op_refl(self) -> None:
        self._push(OThm(self.kernel.refl(self._pop_term())))

    def _op_remove(self) -> None:
        k = self._pop_num()
        if k not in self.dictionary:
            raise ShapeError(f"remove: no dictionary entry {k}")
        self._push(self.dictionary.pop(k))

    def _op_subst(self) -> None:
        d = self._pop_thm()
        obj = self._pop_list()
        if len(obj) != 2:
            raise ShapeError("subst: expected [tyMap, tmMap]")
        ty_pairs = []
        for p in _as_list(obj[0], "type map"):
            items = _as_list(p, "type map entry")
            if len(items) != 2:
                raise ShapeError("subst: malformed type map entry")
            ty_pairs.append((_as_name(items[0], "type variable"),
                             _as_type(items[1], "type")))
        tm_pairs = []
        for p in _as_list(obj[1], "term map"):
            items = _as_list(p, "term map entry")
            if len(items) != 2:
                raise ShapeError("subst: malformed term map entry")
            if not isinstance(items[0], OVar):
                raise ShapeError("subst: term map key must be a variable")
            tm_pairs.append((items[0].var, _as_term(items[1], "replacement term")))
        s = Substitution(ty_map=tuple(ty_pairs), tm_map=tuple(tm_pairs))
        self._push(OThm(self.kernel.subst(s, d)))

    def _op_sym(self) -> None:
        self._push(OThm(self.kernel.sym(self._pop_thm())))

    def _op_thm(self) -> None:
        d = self._pop_thm()
        concl = self._pop_term()
        hyps = tuple(_as_term(h, "hypothesis") for h in self._pop_list())
        if not alpha_equal(d.concl, concl):
            raise ExportMismatch("thm: conclusion does not match the theorem")
        if sorted(set(alpha_key(h) for h in hyps)) != [alpha_key(h) for h in d.hyps]:
            raise ExportMismatch("thm: hypotheses do not match the theorem")
        self.exports.append(Export(f"proof-{len(self.exports) + 1}", d))

    def _op_trans(self) -> None:
        d2 = self._pop_thm()
        d1 = self._pop_thm()
        self._push(OThm(self.kernel.trans(d1, d2)))

    def _op_type_op(self) -> None:
        self._push(OTypeOp(self._pop_name()))

    def _op_var(self) -> None:
        ty = self._pop_type()
        n = self._pop_name()
        self._push(OVar(Var(n, ty)))

    def _op_var_term(self) -> None:
        self._push(OTerm(self._pop_var()))

    def _op_var_type(self) -> None:
        self._push(OType(TyVar(self._pop_name())))

    def _op_version(self) -> None:
        v = self._pop_num()
        if self.version_declared:
            raise VersionError("duplicate version declaration")
        if self.executed != 1:
            raise VersionError("version must be the first command")
        if v != 6:
            raise VersionError(f"unsupported article version {v}")
        self.version_declared = True
        if self.forced is None:
            self.version = 6
            self.kernel.version = 6


_HANDLERS = {
    "absTerm": Machine._op_abs_term, "absThm": Machine._op_abs_thm,
    "appTerm": Machine._op_app_term, "appThm": Machine._op_app_thm,
    "assume": Machine._op_assume, "axiom": Machine._op_axiom,
    "betaConv": Machine._op_beta_conv, "cons": Machine._op_cons,
    "const": Machine._op_const, "constTerm": Machine._op_const_term,
    "deductAntisym": Machine._op_deduct_antisym, "def": Machine._op_def,
    "defineConst": Machine._op_define_const,
    "defineConstList": Machine._op_define_const_list,
    "defineTypeOp": Machine._op_define_type_op, "eqMp": Machine._op_eq_mp,
    "hdTl": Machine._op_hd_tl, "nil": Machine._op_nil,
    "opType": Machine._op_op_type, "pop": Machine._op_pop,
    "pragma": Machine._op_pragma, "proveHyp": Machine._op_prove_hyp,
    "ref": Machine._op_ref, "refl": Machine._op_refl,
    "remove": Machine._op_remove, "subst": Machine._op_subst,
    "sym": Machine._op_sym, "thm": Machine._op_thm,
    "trans": Machine._op_trans, "typeOp": Machine._op_type_op,
    "var": Machine._op_var, "varTerm": Machine._op_var_term,
    "varType": Machine._op_var_type, "version": Machine._op_version,
}


def replay(text: Union[str, Iterable[str]], version_mode: Optional[int] = None,
           strict: bool = True) -> ArticleResult:
    """Execute every command in the article and collect the results.

    In strict mode a non-empty final stack is an error; in lenient mode it is
    tolerated.  The dictionary may be non-empty in either mode.
    """
    machine = Machine(version_mode)
    lines = text.splitlines() if isinstance(text, str) else list(text)
    for i, raw in enumerate(lines, start=1):
        cmd = parse_line(raw, i)
        if cmd is None:
            continue
        try:
            machine.execute(cmd)
        except (ArticleError, KernelError) as e:
            if getattr(e, "line", None) is None:
                e.line = i  # type: ignore[attr-defined]
            raise
    warnings: list[str] = []
    if machine.stack:
        if strict:
            raise NonEmptyFinalStack(f"{len(machine.stack)} objects left on the stack")
        warnings.append(f"{len(machine.stack)} objects left on the stack")
    return ArticleResult(
        exports=machine.exports,
        assumptions=list(machine.kernel.assumptions.values()),
        trace=machine.kernel.trace,
        command_counts=machine.command_counts,
        version=machine.version,
        kernel=machine.kernel,
        warnings=warnings,
    )


def read_article_text(path: Union[str, Path]) -> str:
    """Read article text from a file, transparently gunzipping `.art.gz`."""
    data = Path(path).read_bytes()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data.decode("utf-8")


# ---------------------------------------------------------------------------
# Re-derivation: rebuild a trace using only rules of the target version.

def _needed_nodes(trace, export_ids: Iterable[int]) -> set[int]:
    nodes = trace.nodes
    needed: set[int] = set()
    work = list(export_ids)
    for n in nodes:
        if n.rule == "axiom":
            work.append(n.id)
    while work:
        i = work.pop()
        if i in needed:
            continue
        needed.add(i)
        work.extend(nodes[i].premises)
    return needed


def rederive(result: ArticleResult, version: int) -> ArticleResult:
    """Replay a trace through a fresh kernel at the requested version,
    expanding rules the target lacks.  Exports keep their order and hints;
    only nodes reachable from exports or recording assumptions survive."""
    if version not in (5, 6):
        raise VersionError(f"unsupported target version {version}")
    src = result.trace
    needed = _needed_nodes(src, [e.theorem.trace for e in result.exports])
    k = Kernel(version=version)
    out: dict[int, Theorem] = {}
    dtop_memo: dict[tuple, dict[str, Theorem]] = {}

    for node in src.nodes:
        if node.id not in needed:
            continue
        rule, pay = node.rule, node.payload
        prem = [out[p] for p in node.premises]
        if rule == "refl":
            thm = k.refl(pay["term"])
        elif rule == "assume":
            thm = k.assume(pay["term"])
        elif rule == "betaConv":
            thm = k.beta_conv(pay["term"])
        elif rule == "axiom":
            thm = k.axiom(pay["hyps"], pay["concl"])
        elif rule == "eqMp":
            thm = k.eq_mp(prem[0], prem[1])
        elif rule == "appThm":
            thm = k.app_thm(prem[0], prem[1])
        elif rule == "deductAntisym":
            thm = k.deduct_antisym(prem[0], prem[1])
        elif rule == "absThm":
            thm = k.abs_thm(pay["var"], prem[0])
        elif rule == "subst":
            thm = k.subst(pay["subst"], prem[0])
        elif rule == "defineConst":
            _, thm = k.define_const(pay["name"], pay["term"])
        elif rule == "defineTypeOp":
            pair = dtop_memo.get(pay["op"].key())
            if pair is None:
                _, _, _, a_thm, r_thm = k.define_type_op(
                    pay["op"], pay["abs"], pay["rep"], pay["tyVars"], prem[0])
                if pay["version"] != version:
                    if version == 5:
                        a_thm, r_thm = derive_type_op_eta(k, a_thm, r_thm)
                    else:
                        a_thm, r_thm = derive_type_op_plain(k, a_thm, r_thm)
                pair = {"abs": a_thm, "rep": r_thm}
                dtop_memo[pay["op"].key()] = pair
            thm = pair[pay["tag"]]
        elif rule == "sym":
            thm = k.sym(prem[0]) if version == 6 else derive_sym(k, prem[0])
        elif rule == "trans":
            thm = (k.trans(prem[0], prem[1]) if version == 6
                   else derive_trans(k, prem[0], prem[1]))
        elif rule == "proveHyp":
            thm = (k.prove_hyp(prem[0], prem[1]) if version == 6
                   else derive_prove_hyp(k, prem[0], prem[1]))
        else:
            raise ArticleError(f"cannot re-derive rule {rule}")
        out[node.id] = thm

    return ArticleResult(
        exports=[Export(e.hint, out[e.theorem.trace]) for e in result.exports],
        assumptions=list(k.assumptions.values()),
        trace=k.trace,
        command_counts={},
        version=version,
        kernel=k,
    )


# ---------------------------------------------------------------------------
# Serialization

class _Emitter:
    """Two-pass writer.  The counting pass tallies structural occurrences of
    types, variables and terms; the write pass dictionary-shares every object
    that occurred more than once.  Both passes traverse identically."""

    def __init__(self) -> None:
        self.lines: list[str] = []
        self.counts: dict[tuple, int] = {}
        self.keys: dict[tuple, int] = {}
        self.next_key = 0
        self.counting = True

    def cmd(self, s: str) -> None:
        if not self.counting:
            self.lines.append(s)

    def num(self, i: int) -> None:
        self.cmd(str(i))

    def name(self, n: Name) -> None:
        self.cmd(quote_name(n))

    def shared(self, kind: str, obj, build) -> None:
        key = (kind, obj)
        if self.counting:
            self.counts[key] = self.counts.get(key, 0) + 1
            if self.counts[key] == 1:
                build()
            return
        if key in self.keys:
            self.num(self.keys[key])
            self.cmd("ref")
            return
        build()
        if self.counts.get(key, 0) > 1:
            k = self.next_key
            self.next_key += 1
            self.num(k)
            self.cmd("def")
            self.keys[key] = k

    def ty(self, ty: HolType) -> None:
        self.shared("ty", ty, lambda: self._build_ty(ty))

    def _build_ty(self, ty: HolType) -> None:
        if isinstance(ty, TyVar):
            self.name(ty.name)
            self.cmd("varType")
        else:
            self.name(ty.op)
            self.cmd("typeOp")
            for a in ty.args:
                self.ty(a)
            self.cmd("nil")
            for _ in ty.args:
                self.cmd("cons")
            self.cmd("opType")

    def var(self, v: Var) -> None:
        self.shared("v", v, lambda: self._build_var(v))

    def _build_var(self, v: Var) -> None:
        self.name(v.name)
        self.ty(v.ty)
        self.cmd("var")

    def term(self, t: HolTerm) -> None:
        self.shared("tm", t, lambda: self._build_term(t))

    def _build_term(self, t: HolTerm) -> None:
        if isinstance(t, Var):
            self.var(t)
            self.cmd("varTerm")
        elif isinstance(t, Const):
            self.name(t.name)
            self.cmd("const")
            self.ty(t.ty)
            self.cmd("constTerm")
        elif isinstance(t, App):
            self.term(t.fun)
            self.term(t.arg)
            self.cmd("appTerm")
        else:
            self.var(t.var)
            self.term(t.body)
            self.cmd("absTerm")

    def term_list(self, terms: Iterable[HolTerm]) -> None:
        terms = list(terms)
        for t in terms:
            self.term(t)
        self.cmd("nil")
        for _ in terms:
            self.cmd("cons")


def emit_article(result: ArticleResult, version: Optional[int] = None) -> str:
    """Serialize a replay result as canonical article text.

    Nodes reachable from exports are written in trace order with dictionary
    sharing; axiom leaves are always kept so the assumption set survives.
    The output replays to alpha-equal exports and, replayed and re-emitted,
    reproduces itself byte for byte.
    """
    target = version if version is not None else result.version
    work = rederive(result, target)
    nodes = work.trace.nodes
    # re-derivation may manufacture helper conclusions nobody consumes; strip
    # them so emitting, replaying and emitting again is a fixpoint
    needed = _needed_nodes(work.trace, [e.theorem.trace for e in work.exports])

    refs: dict[int, int] = {}
    for n in nodes:
        if n.id not in needed:
            continue
        for p in n.premises:
            refs[p] = refs.get(p, 0) + 1
    for e in work.exports:
        i = e.theorem.trace
        refs[i] = refs.get(i, 0) + 1

    # pair up the two tagged halves of a defineTypeOp invocation
    dtop_partner: dict[int, int] = {}
    first_by_op: dict[tuple, int] = {}
    for n in nodes:
        if n.rule == "defineTypeOp":
            key = n.payload["op"].key()
            if key in first_by_op:
                dtop_partner[first_by_op[key]] = n.id
                dtop_partner[n.id] = first_by_op[key]
            else:
                first_by_op[key] = n.id

    em = _Emitter()

    def thm_ref(nid: int) -> None:
        if not em.counting:
            em.num(em.keys[("thm", nid)])
            em.cmd("ref")

    def def_and_pop(nid: int) -> None:
        # theorem on top of stack; keep it addressable if referenced later
        if refs.get(nid, 0) > 0 and not em.counting:
            k = em.next_key
            em.next_key += 1
            em.num(k)
            em.cmd("def")
            em.keys[("thm", nid)] = k
        em.cmd("pop")

    def emit_subst_object(s: Substitution) -> None:
        for nm, ty in s.ty_map:
            em.name(nm)
            em.ty(ty)
            em.cmd("nil")
            em.cmd("cons")
            em.cmd("cons")
        em.cmd("nil")
        for _ in s.ty_map:
            em.cmd("cons")
        for v, t in s.tm_map:
            em.var(v)
            em.term(t)
            em.cmd("nil")
            em.cmd("cons")
            em.cmd("cons")
        em.cmd("nil")
        for _ in s.tm_map:
            em.cmd("cons")
        em.cmd("nil")
        em.cmd("cons")
        em.cmd("cons")

    def walk() -> None:
        emitted: set[int] = set()
        for n in nodes:
            if n.id in emitted or n.id not in needed:
                continue
            rule, pay = n.rule, n.payload
            if rule in ("refl", "assume", "betaConv"):
                em.term(pay["term"])
                em.cmd(rule)
            elif rule == "axiom":
                em.term_list(pay["hyps"])
                em.term(pay["concl"])
                em.cmd("axiom")
            elif rule in ("eqMp", "appThm", "deductAntisym", "trans", "proveHyp"):
                thm_ref(n.premises[0])
                thm_ref(n.premises[1])
                em.cmd(rule)
            elif rule == "sym":
                thm_ref(n.premises[0])
                em.cmd("sym")
            elif rule == "absThm":
                em.var(pay["var"])
                thm_ref(n.premises[0])
                em.cmd("absThm")
            elif rule == "subst":
                emit_subst_object(pay["subst"])
                thm_ref(n.premises[0])
                em.cmd("subst")
            elif rule == "defineConst":
                em.name(pay["name"])
                em.term(pay["term"])
                em.cmd("defineConst")
                def_and_pop(n.id)
                em.cmd("pop")
                emitted.add(n.id)
                continue
            elif rule == "defineTypeOp":
                partner = dtop_partner.get(n.id)
                em.name(pay["op"])
                em.name(pay["abs"])
                em.name(pay["rep"])
                for tv in pay["tyVars"]:
                    em.name(tv)
                em.cmd("nil")
                for _ in pay["tyVars"]:
                    em.cmd("cons")
                thm_ref(n.premises[0])
                em.cmd("defineTypeOp")
                rep_id = n.id if pay["tag"] == "rep" else partner
                abs_id = n.id if pay["tag"] == "abs" else partner
                for nid in (rep_id, abs_id):
                    if nid is None:
                        em.cmd("pop")
                    else:
                        def_and_pop(nid)
                        emitted.add(nid)
                em.cmd("pop")
                em.cmd("pop")
                em.cmd("pop")
                continue
            else:
                raise ArticleError(f"cannot serialize rule {rule}")
            def_and_pop(n.id)
            emitted.add(n.id)

        for e in work.exports:
            t = e.theorem
            em.term_list(t.hyps)
            em.term(t.concl)
            thm_ref(t.trace)
            em.cmd("thm")

    walk()  # counting pass
    em.counting = False
    em.next_key = 0
    em.keys = {}
    if target == 6:
        em.lines = ["6", "version"]
    walk()  # write pass
    return "\n".join(em.lines) + ("\n" if em.lines else "")
