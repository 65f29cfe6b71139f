"""Translation of replayed proof traces into lambda-Pi-modulo modules.

Each article becomes one module over a fixed prelude that encodes the object
logic: `type`, `term`, `proof`, equality and one inference combinator per
derivation rule.  Proof steps referenced more than once become named
definitions, everything else is inlined.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Optional, Union

from .article import ArticleResult
from .kernel import (
    ARROW, Abs, App, BOOL, BOOL_OP, Const, EQ_NAME, HolTerm, HolType, IND_OP,
    Kernel, Name, SELECT_NAME, Substitution, Theorem, TyApp, TyVar, Var,
    alpha_key, dest_eq, dest_fun, free_vars, inst_term, inst_type, mk_fun,
    name, sequent_key, subst_term, term_type_vars, type_key, type_match,
    type_of, type_vars,
)


class TranslateError(Exception):
    pass


class UndeclaredConst(TranslateError):
    pass


class UndeclaredTypeOp(TranslateError):
    pass


class UntranslatableRule(TranslateError):
    pass


# ---------------------------------------------------------------------------
# Target terms and declarations

@dataclass(frozen=True)
class LpSort:
    """The sort of types (printed `Type`)."""


@dataclass(frozen=True)
class LpVar:
    name: str


@dataclass(frozen=True)
class LpApp:
    fun: "LpTerm"
    arg: "LpTerm"


@dataclass(frozen=True)
class LpLam:
    name: str
    ann: "LpTerm"
    body: "LpTerm"


@dataclass(frozen=True)
class LpPi:
    """Dependent product; `name` of None is the non-dependent arrow."""

    name: Optional[str]
    dom: "LpTerm"
    cod: "LpTerm"


LpTerm = Union[LpSort, LpVar, LpApp, LpLam, LpPi]
SORT = LpSort()


@dataclass(frozen=True)
class LpConst:
    name: str
    ty: LpTerm


@dataclass(frozen=True)
class LpDef:
    name: str
    ty: LpTerm
    body: LpTerm


@dataclass(frozen=True)
class LpRule:
    ctx: tuple[str, ...]
    lhs: LpTerm
    rhs: LpTerm


LpDeclaration = Union[LpConst, LpDef, LpRule]


@dataclass(frozen=True)
class LpModule:
    name: str
    dependencies: tuple[str, ...]
    declarations: tuple[LpDeclaration, ...]


def lp_app(f: LpTerm, *args: LpTerm) -> LpTerm:
    for a in args:
        f = LpApp(f, a)
    return f


def arrow(dom: LpTerm, cod: LpTerm) -> LpPi:
    return LpPi(None, dom, cod)


def spine(t: LpTerm) -> tuple[LpTerm, list[LpTerm]]:
    """Split nested applications into head and argument list (innermost first)."""
    args: list[LpTerm] = []
    while isinstance(t, LpApp):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


# ---------------------------------------------------------------------------
# The prelude

def prelude_module() -> LpModule:
    V = LpVar
    T = V("type")

    def term(a: LpTerm) -> LpTerm:
        return lp_app(V("term"), a)

    def proof(x: LpTerm) -> LpTerm:
        return lp_app(V("proof"), x)

    def eq(a: LpTerm, x: LpTerm, y: LpTerm) -> LpTerm:
        return lp_app(V("eq"), a, x, y)

    a, b, f, g, x, y, z = V("a"), V("b"), V("f"), V("g"), V("x"), V("y"), V("z")
    fun_ab = arrow(term(a), term(b))

    decls: tuple[LpDeclaration, ...] = (
        LpConst("type", SORT),
        LpConst("bool", T),
        LpConst("ind", T),
        LpConst("arr", arrow(T, arrow(T, T))),
        LpConst("term", arrow(T, SORT)),
        LpRule(("a", "b"),
               term(lp_app(V("arr"), a, b)),
               arrow(term(a), term(b))),
        LpConst("proof", arrow(term(V("bool")), SORT)),
        LpConst("eq", LpPi("a", T, arrow(term(a), arrow(term(a),
                                                        term(V("bool")))))),
        LpConst("select", LpPi("a", T,
                               term(lp_app(V("arr"),
                                           lp_app(V("arr"), a, V("bool")),
                                           a)))),
        LpConst("Refl", LpPi("a", T, LpPi("x", term(a),
                                          proof(eq(a, x, x))))),
        LpConst("AbsThm", LpPi("a", T, LpPi("b", T, LpPi(
            "f", fun_ab, LpPi(
                "g", fun_ab, arrow(
                    LpPi("x", term(a),
                         proof(eq(b, lp_app(f, x), lp_app(g, x)))),
                    proof(eq(lp_app(V("arr"), a, b), f, g)))))))),
        LpConst("AppThm", LpPi("a", T, LpPi("b", T, LpPi(
            "f", fun_ab, LpPi("g", fun_ab, LpPi(
                "x", term(a), LpPi(
                    "y", term(a), arrow(
                        proof(eq(lp_app(V("arr"), a, b), f, g)),
                        arrow(proof(eq(a, x, y)),
                              proof(eq(b, lp_app(f, x),
                                       lp_app(g, y)))))))))))),
        LpConst("EqMp", LpPi("x", term(V("bool")), LpPi(
            "y", term(V("bool")), arrow(
                proof(eq(V("bool"), x, y)),
                arrow(proof(x), proof(y)))))),
        LpConst("DeductAntisym", LpPi("x", term(V("bool")), LpPi(
            "y", term(V("bool")), arrow(
                arrow(proof(y), proof(x)),
                arrow(arrow(proof(x), proof(y)),
                      proof(eq(V("bool"), x, y))))))),
        LpConst("BetaConv", LpPi("a", T, LpPi("b", T, LpPi(
            "f", fun_ab, LpPi(
                "x", term(a),
                proof(eq(b, lp_app(f, x), lp_app(f, x)))))))),
        LpConst("Sym", LpPi("a", T, LpPi("x", term(a), LpPi(
            "y", term(a), arrow(proof(eq(a, x, y)),
                                proof(eq(a, y, x))))))),
        LpConst("Trans", LpPi("a", T, LpPi("x", term(a), LpPi(
            "y", term(a), LpPi(
                "z", term(a), arrow(
                    proof(eq(a, x, y)),
                    arrow(proof(eq(a, y, z)),
                          proof(eq(a, x, z))))))))),
        LpConst("ProveHyp", LpPi("x", term(V("bool")), LpPi(
            "y", term(V("bool")), arrow(
                proof(x),
                arrow(arrow(proof(x), proof(y)), proof(y)))))),
    )
    return LpModule("prelude", (), decls)


PRELUDE_IDENTS = frozenset(
    d.name for d in prelude_module().declarations if not isinstance(d, LpRule))


# ---------------------------------------------------------------------------
# Identifier mangling

_KEEP = set(string.ascii_letters + string.digits + "_")


def mangle_base(text: str) -> str:
    out = []
    for ch in text:
        if ch in _KEEP:
            out.append(ch)
        elif ch == ".":
            out.append("_")
        else:
            out.append("_u%04X_" % ord(ch))
    base = "".join(out)
    if not base or base.startswith("_"):
        base = "n" + base
    return base


class MangleTable:
    """Injective Name -> identifier mapping with deterministic collision
    suffixes.  Underscore-prefixed identifiers are reserved for machinery and
    never produced here."""

    def __init__(self, reserved=()):
        self.used: set[str] = set(reserved)
        self.by_name: dict[tuple, str] = {}

    def ident(self, n: Name) -> str:
        key = n.key()
        got = self.by_name.get(key)
        if got is not None:
            return got
        base = mangle_base(str(n))
        ident = base
        i = 0
        while ident in self.used:
            i += 1
            ident = f"{base}_{i}"
        self.used.add(ident)
        self.by_name[key] = ident
        return ident

    def fresh(self, base: str) -> str:
        ident = base
        i = 0
        while ident in self.used:
            i += 1
            ident = f"{base}_{i}"
        self.used.add(ident)
        return ident


def module_ident(package: str) -> str:
    out = "".join(ch if ch in _KEEP else "_" for ch in package)
    return out or "pkg"


def _lgg(instances) -> HolType:
    """Least general generalization of simple types: positions where the
    instances disagree become type variables, one shared variable per
    distinct combination so e.g. (t -> t, s -> s) generalizes to g1 -> g1."""
    used = set()
    for ty in instances:
        used |= {n.key() for n in type_vars(ty)}
    memo: dict[tuple, TyVar] = {}
    count = [0]

    def fresh(key: tuple) -> TyVar:
        got = memo.get(key)
        if got is None:
            while True:
                count[0] += 1
                candidate = name(f"g{count[0]}")
                if candidate.key() not in used:
                    break
            got = TyVar(candidate)
            memo[key] = got
        return got

    def go(ts: tuple) -> HolType:
        first = ts[0]
        if all(t == first for t in ts[1:]):
            return first
        if (isinstance(first, TyApp)
                and all(isinstance(t, TyApp) and t.op == first.op
                        and len(t.args) == len(first.args)
                        for t in ts[1:])):
            return TyApp(first.op,
                         tuple(go(tuple(t.args[i] for t in ts))
                               for i in range(len(first.args))))
        return fresh(ts)

    return go(tuple(instances))


# ---------------------------------------------------------------------------
# Trace translation

def _proof(x: LpTerm) -> LpTerm:
    return lp_app(LpVar("proof"), x)


def _term(a: LpTerm) -> LpTerm:
    return lp_app(LpVar("term"), a)


def _var_key(v: Var) -> tuple:
    return (v.name.key(), type_key(v.ty))


class Translator:
    """Translates one replay result into one module.

    `imports` maps sequent keys of boundary assumptions to identifiers that
    dependency modules already define; matching axiom nodes reference those
    instead of declaring a fresh axiom constant.
    """

    def __init__(self, result: ArticleResult, package: str,
                 imports: Optional[dict] = None,
                 dependencies: tuple[str, ...] = ("prelude",)):
        self.result = result
        self.module_name = module_ident(package)
        self.imports = dict(imports or {})
        self.dependencies = tuple(dependencies)
        self.table = MangleTable(reserved=set(PRELUDE_IDENTS) | {"Type", "def"})
        self.decls: list[LpDeclaration] = []
        self.consts: dict[tuple, tuple[str, HolType, tuple[Name, ...]]] = {}
        self.typeops: dict[tuple, tuple[str, int]] = {}
        self.thms: dict[int, Theorem] = {}
        self.dtop_info: dict[int, dict] = {}
        self.named: dict[int, str] = {}
        self.params: dict[int, tuple[tuple[Name, ...], tuple[Var, ...]]] = {}
        self.extern_generic: dict[tuple, HolType] = {}
        self._local_used: set[str] = set()
        self._discharges = 0

    # -- replaying the trace to recover sequents -------------------------------

    def _replay(self) -> None:
        nodes = self.result.trace.nodes
        k = Kernel(version=self.result.version)
        dtop_memo: dict[tuple, dict] = {}
        for node in nodes:
            rule, pay = node.rule, node.payload
            prem = [self.thms[p] for p in node.premises]
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
                info = dtop_memo.get(pay["op"].key())
                if info is None:
                    op, absc, repc, a_thm, r_thm = k.define_type_op(
                        pay["op"], pay["abs"], pay["rep"], pay["tyVars"],
                        prem[0])
                    info = {"abs_c": absc, "rep_c": repc, "first": node.id,
                            "abs": a_thm, "rep": r_thm,
                            "rep_ty": type_of(prem[0].concl.arg)}
                    dtop_memo[pay["op"].key()] = info
                self.dtop_info[node.id] = info
                thm = info[pay["tag"]]
            elif rule == "sym":
                thm = k.sym(prem[0])
            elif rule == "trans":
                thm = k.trans(prem[0], prem[1])
            elif rule == "proveHyp":
                thm = k.prove_hyp(prem[0], prem[1])
            else:
                raise UntranslatableRule(f"cannot translate rule {rule}")
            self.thms[node.id] = Theorem(thm.hyps, thm.concl, node.id)

    # -- reachability, sharing and parameter sets ------------------------------

    def _plan(self) -> None:
        nodes = self.result.trace.nodes
        reachable: set[int] = set()
        work = [e.theorem.trace for e in self.result.exports]
        while work:
            i = work.pop()
            if i in reachable:
                continue
            reachable.add(i)
            if nodes[i].rule != "defineTypeOp":
                work.extend(nodes[i].premises)
        self.reachable = reachable

        refs: dict[int, int] = {}
        for i in sorted(reachable):
            node = nodes[i]
            if node.rule == "defineTypeOp":
                continue
            for p in node.premises:
                refs[p] = refs.get(p, 0) + 1
        for e in self.result.exports:
            refs[e.theorem.trace] = refs.get(e.theorem.trace, 0) + 1

        force = set()
        for i in sorted(reachable):
            node = nodes[i]
            if node.rule in ("axiom", "defineTypeOp"):
                force.add(i)
            if node.rule == "subst":
                force.add(node.premises[0])
        for e in self.result.exports:
            force.add(e.theorem.trace)
        self.shared = {i for i in reachable
                       if refs.get(i, 0) > 1 or i in force}

        # parameter sets: union of free type/term variables over the proof dag
        u_ty: dict[int, set[Name]] = {}
        u_tm: dict[int, set[Var]] = {}
        for i in sorted(reachable):
            node = nodes[i]
            thm = self.thms[i]
            tys: set[Name] = set()
            tms: set[Var] = set()
            for t in thm.hyps + (thm.concl,):
                tys |= term_type_vars(t)
                tms |= free_vars(t)
            if node.rule == "subst":
                p = node.premises[0]
                s = node.payload["subst"]
                ty_map = s.ty_dict()
                tm_inst = {Var(v.name, inst_type(ty_map, v.ty)): r
                           for (v, r) in s.tm_map}
                for a in u_ty[p]:
                    tys |= type_vars(inst_type(ty_map, TyVar(a)))
                for v in u_tm[p]:
                    v2 = Var(v.name, inst_type(ty_map, v.ty))
                    img = tm_inst.get(v2, v2)
                    tys |= term_type_vars(img)
                    tms |= free_vars(img)
            elif node.rule == "absThm":
                # the image abstracts the bound variable itself, so the
                # premise no longer contributes it as a parameter
                p = node.premises[0]
                tys |= u_ty[p]
                tms |= u_tm[p] - {node.payload["var"]}
            elif node.rule != "defineTypeOp":
                for p in node.premises:
                    tys |= u_ty[p]
                    tms |= u_tm[p]
            u_ty[i] = tys
            u_tm[i] = tms
            self.params[i] = (
                tuple(sorted(tys, key=lambda n: n.key())),
                tuple(sorted(tms, key=_var_key)))

    # -- types and terms --------------------------------------------------------

    def tyvar_ident(self, n: Name) -> str:
        return self.table.ident(Name(("ty",) + n.components, n.base))

    def var_ident(self, v: Var) -> str:
        return self.table.ident(Name(("tm",) + v.name.components,
                                     v.name.base))

    def trans_type(self, ty: HolType, venv: dict) -> LpTerm:
        if isinstance(ty, TyVar):
            got = venv.get(("ty", ty.name.key()))
            if got is None:
                raise TranslateError(f"unbound type variable {ty.name}")
            return got
        if ty == BOOL:
            return LpVar("bool")
        if ty.op == IND_OP and not ty.args:
            return LpVar("ind")
        if ty.op == ARROW and len(ty.args) == 2:
            return lp_app(LpVar("arr"),
                          self.trans_type(ty.args[0], venv),
                          self.trans_type(ty.args[1], venv))
        entry = self.typeops.get(ty.op.key())
        if entry is None:
            # external type operator: first use fixes the arity
            ident = self.table.ident(ty.op)
            lp_ty: LpTerm = LpVar("type")
            for _ in ty.args:
                lp_ty = arrow(LpVar("type"), lp_ty)
            self.decls.append(LpConst(ident, lp_ty))
            entry = (ident, len(ty.args))
            self.typeops[ty.op.key()] = entry
        ident, arity = entry
        if arity != len(ty.args):
            raise UndeclaredTypeOp(
                f"type operator {ty.op} used at arity {len(ty.args)}, "
                f"declared at {arity}")
        return lp_app(LpVar(ident),
                      *[self.trans_type(a, venv) for a in ty.args])

    def _declare_const(self, n: Name, generic: HolType) -> None:
        ident = self.table.ident(n)
        tyvs = tuple(sorted(type_vars(generic), key=lambda x: x.key()))
        venv = {("ty", a.key()): LpVar(self.tyvar_ident(a)) for a in tyvs}
        lp_ty: LpTerm = _term(self.trans_type(generic, venv))
        for a in reversed(tyvs):
            lp_ty = LpPi(self.tyvar_ident(a), LpVar("type"), lp_ty)
        self.decls.append(LpConst(ident, lp_ty))
        self.consts[n.key()] = (ident, generic, tyvs)

    def trans_const(self, c: Const, venv: dict) -> LpTerm:
        if c.name == EQ_NAME:
            parts = dest_fun(c.ty)
            if parts is None:
                raise UndeclaredConst("equality used at a non-function type")
            return lp_app(LpVar("eq"), self.trans_type(parts[0], venv))
        if c.name == SELECT_NAME:
            outer = dest_fun(c.ty)
            inner = dest_fun(outer[0]) if outer else None
            if inner is None:
                raise UndeclaredConst("select used at a non-function type")
            return lp_app(LpVar("select"), self.trans_type(inner[0], venv))
        entry = self.consts.get(c.name.key())
        if entry is None:
            # external constant, declared on first use at the pre-scanned
            # type so every later instance is an instantiation of it
            self._declare_const(
                c.name, self.extern_generic.get(c.name.key(), c.ty))
            entry = self.consts[c.name.key()]
        ident, generic, tyvs = entry
        binding: dict[Name, HolType] = {}
        if not type_match(generic, c.ty, binding):
            raise UndeclaredConst(
                f"constant {c.name} used at a type incompatible with its "
                f"declaration")
        return lp_app(LpVar(ident),
                      *[self.trans_type(binding.get(a.name, a), venv)
                        for a in (TyVar(n) for n in tyvs)])

    def trans_term(self, t: HolTerm, venv: dict) -> LpTerm:
        if isinstance(t, Var):
            got = venv.get(("tm", _var_key(t)))
            if got is None:
                raise TranslateError(f"unbound term variable {t.name}")
            return got
        if isinstance(t, Const):
            return self.trans_const(t, venv)
        if isinstance(t, App):
            return LpApp(self.trans_term(t.fun, venv),
                         self.trans_term(t.arg, venv))
        ident = self._fresh_local(mangle_base(str(t.var.name)))
        inner = dict(venv)
        inner[("tm", _var_key(t.var))] = LpVar(ident)
        return LpLam(ident, _term(self.trans_type(t.var.ty, venv)),
                     self.trans_term(t.body, inner))

    def _fresh_local(self, base: str) -> str:
        ident = base
        i = 0
        while ident in self._local_used or ident in self.table.used:
            i += 1
            ident = f"{base}_{i}"
        self._local_used.add(ident)
        return ident

    # -- proofs -----------------------------------------------------------------

    def _sequent_type(self, thm: Theorem, tyvs, tmvs, venv) -> LpTerm:
        ty: LpTerm = _proof(self.trans_term(thm.concl, venv))
        for i in range(len(thm.hyps) - 1, -1, -1):
            ty = LpPi(f"_h{i + 1}",
                      _proof(self.trans_term(thm.hyps[i], venv)), ty)
        for v in reversed(tmvs):
            ty = LpPi(self.var_ident(v),
                      _term(self.trans_type(v.ty, venv)), ty)
        for a in reversed(tyvs):
            ty = LpPi(self.tyvar_ident(a), LpVar("type"), ty)
        return ty

    def _base_venv(self, tyvs, tmvs) -> dict:
        venv: dict = {}
        for a in tyvs:
            venv[("ty", a.key())] = LpVar(self.tyvar_ident(a))
        for v in tmvs:
            venv[("tm", _var_key(v))] = LpVar(self.var_ident(v))
        return venv

    def _wrap_params(self, body: LpTerm, thm: Theorem, tyvs, tmvs,
                     venv: dict) -> LpTerm:
        for i in range(len(thm.hyps) - 1, -1, -1):
            body = LpLam(f"_h{i + 1}",
                         _proof(self.trans_term(thm.hyps[i], venv)), body)
        for v in reversed(tmvs):
            body = LpLam(self.var_ident(v),
                         _term(self.trans_type(v.ty, venv)), body)
        for a in reversed(tyvs):
            body = LpLam(self.tyvar_ident(a), LpVar("type"), body)
        return body

    def proof_term(self, nid: int, env: dict, venv: dict) -> LpTerm:
        ident = self.named.get(nid)
        if ident is not None:
            tyvs, tmvs = self.params[nid]
            args: list[LpTerm] = []
            for a in tyvs:
                args.append(venv[("ty", a.key())])
            for v in tmvs:
                args.append(venv[("tm", _var_key(v))])
            for h in self.thms[nid].hyps:
                args.append(env[alpha_key(h)])
            return lp_app(LpVar(ident), *args)
        return self.rule_body(nid, env, venv)

    def _discharge(self) -> str:
        self._discharges += 1
        return f"_d{self._discharges}"

    def rule_body(self, nid: int, env: dict, venv: dict) -> LpTerm:
        node = self.result.trace.nodes[nid]
        rule, pay = node.rule, node.payload
        prem = node.premises
        V = LpVar

        if rule == "assume":
            return env[alpha_key(pay["term"])]
        if rule == "refl":
            t = pay["term"]
            return lp_app(V("Refl"), self.trans_type(type_of(t), venv),
                          self.trans_term(t, venv))
        if rule == "betaConv":
            redex = pay["term"]
            lam, arg = redex.fun, redex.arg
            return lp_app(V("BetaConv"),
                          self.trans_type(lam.var.ty, venv),
                          self.trans_type(type_of(lam.body), venv),
                          self.trans_term(lam, venv),
                          self.trans_term(arg, venv))
        if rule == "eqMp":
            p, q, _ = dest_eq(self.thms[prem[0]].concl)
            return lp_app(V("EqMp"),
                          self.trans_term(p, venv), self.trans_term(q, venv),
                          self.proof_term(prem[0], env, venv),
                          self.proof_term(prem[1], env, venv))
        if rule == "appThm":
            f, g, fty = dest_eq(self.thms[prem[0]].concl)
            x, y, _ = dest_eq(self.thms[prem[1]].concl)
            a, b = dest_fun(fty)
            return lp_app(V("AppThm"),
                          self.trans_type(a, venv), self.trans_type(b, venv),
                          self.trans_term(f, venv), self.trans_term(g, venv),
                          self.trans_term(x, venv), self.trans_term(y, venv),
                          self.proof_term(prem[0], env, venv),
                          self.proof_term(prem[1], env, venv))
        if rule == "absThm":
            v = pay["var"]
            l, r, bty = dest_eq(self.thms[prem[0]].concl)
            ident = self._fresh_local(mangle_base(str(v.name)))
            inner = dict(venv)
            inner[("tm", _var_key(v))] = V(ident)
            ann = _term(self.trans_type(v.ty, venv))
            return lp_app(V("AbsThm"),
                          self.trans_type(v.ty, venv),
                          self.trans_type(bty, venv),
                          LpLam(ident, ann, self.trans_term(l, inner)),
                          LpLam(ident, ann, self.trans_term(r, inner)),
                          LpLam(ident, ann,
                                self.proof_term(prem[0], env, inner)))
        if rule == "deductAntisym":
            phi1 = self.thms[prem[0]].concl
            phi2 = self.thms[prem[1]].concl
            d1 = self._discharge()
            env1 = dict(env)
            env1[alpha_key(phi2)] = V(d1)
            d2 = self._discharge()
            env2 = dict(env)
            env2[alpha_key(phi1)] = V(d2)
            return lp_app(V("DeductAntisym"),
                          self.trans_term(phi1, venv),
                          self.trans_term(phi2, venv),
                          LpLam(d1, _proof(self.trans_term(phi2, venv)),
                                self.proof_term(prem[0], env1, venv)),
                          LpLam(d2, _proof(self.trans_term(phi1, venv)),
                                self.proof_term(prem[1], env2, venv)))
        if rule == "sym":
            x, y, a = dest_eq(self.thms[prem[0]].concl)
            return lp_app(V("Sym"), self.trans_type(a, venv),
                          self.trans_term(x, venv), self.trans_term(y, venv),
                          self.proof_term(prem[0], env, venv))
        if rule == "trans":
            x, y, a = dest_eq(self.thms[prem[0]].concl)
            _, z, _ = dest_eq(self.thms[prem[1]].concl)
            return lp_app(V("Trans"), self.trans_type(a, venv),
                          self.trans_term(x, venv), self.trans_term(y, venv),
                          self.trans_term(z, venv),
                          self.proof_term(prem[0], env, venv),
                          self.proof_term(prem[1], env, venv))
        if rule == "proveHyp":
            phi = self.thms[prem[0]].concl
            psi = self.thms[prem[1]].concl
            d = self._discharge()
            env2 = dict(env)
            env2[alpha_key(phi)] = V(d)
            return lp_app(V("ProveHyp"),
                          self.trans_term(phi, venv),
                          self.trans_term(psi, venv),
                          self.proof_term(prem[0], env, venv),
                          LpLam(d, _proof(self.trans_term(phi, venv)),
                                self.proof_term(prem[1], env2, venv)))
        if rule == "subst":
            p = prem[0]
            s = pay["subst"]
            ty_map = s.ty_dict()
            tm_inst = {Var(v.name, inst_type(ty_map, v.ty)): r
                       for (v, r) in s.tm_map}
            tyvs, tmvs = self.params[p]
            args: list[LpTerm] = []
            for a in tyvs:
                args.append(self.trans_type(inst_type(ty_map, TyVar(a)), venv))
            for v in tmvs:
                v2 = Var(v.name, inst_type(ty_map, v.ty))
                args.append(self.trans_term(tm_inst.get(v2, v2), venv))
            for h in self.thms[p].hyps:
                image = subst_term(tm_inst, inst_term(ty_map, h))
                args.append(env[alpha_key(image)])
            return lp_app(V(self.named[p]), *args)
        if rule == "defineConst":
            con = Const(pay["name"], type_of(pay["term"]))
            return lp_app(V("Refl"),
                          self.trans_type(con.ty, venv),
                          self.trans_const(con, venv))
        raise UntranslatableRule(f"cannot translate rule {rule}")

    # -- declarations -----------------------------------------------------------

    def _emit_named(self, nid: int, ident: str) -> None:
        thm = self.thms[nid]
        tyvs, tmvs = self.params[nid]
        venv = self._base_venv(tyvs, tmvs)
        self._local_used = set()
        self._discharges = 0
        env = {alpha_key(h): LpVar(f"_h{i + 1}")
               for i, h in enumerate(thm.hyps)}
        body = self._wrap_params(self.rule_body(nid, env, venv),
                                 thm, tyvs, tmvs, venv)
        ty = self._sequent_type(thm, tyvs, tmvs, venv)
        self.decls.append(LpDef(ident, ty, body))

    def _emit_dtop(self, nid: int) -> None:
        info = self.dtop_info[nid]
        node = self.result.trace.nodes[nid]
        pay = node.payload
        if info["first"] == nid and "op_ident" not in info:
            op_ident = self.table.ident(pay["op"])
            lp_ty: LpTerm = LpVar("type")
            for _ in pay["tyVars"]:
                lp_ty = arrow(LpVar("type"), lp_ty)
            self.decls.append(LpConst(op_ident, lp_ty))
            self.typeops[pay["op"].key()] = (op_ident, len(pay["tyVars"]))
            info["op_ident"] = op_ident
            new_ty = TyApp(pay["op"], tuple(TyVar(v) for v in pay["tyVars"]))
            self._declare_const(pay["abs"], mk_fun(info["rep_ty"], new_ty))
            self._declare_const(pay["rep"], mk_fun(new_ty, info["rep_ty"]))
        thm = self.thms[nid]
        tyvs, tmvs = self.params[nid]
        venv = self._base_venv(tyvs, tmvs)
        self._local_used = set()
        ident = self.named[nid]
        self.decls.append(LpConst(
            ident, self._sequent_type(thm, tyvs, tmvs, venv)))

    def _emit_axiom(self, nid: int) -> None:
        thm = self.thms[nid]
        tyvs, tmvs = self.params[nid]
        venv = self._base_venv(tyvs, tmvs)
        self._local_used = set()
        self.decls.append(LpConst(
            self.named[nid], self._sequent_type(thm, tyvs, tmvs, venv)))

    def _scan_externals(self) -> None:
        """Record the most general type each external constant needs.

        A constant's first use can be narrower than a later one (the same
        symbol instantiated at two types), so the declaration must cover
        the least general generalization over every use that will be
        translated: reachable sequents, substitution images, and the
        bodies of constant definitions."""
        nodes = self.result.trace.nodes
        defined = {EQ_NAME.key(), SELECT_NAME.key()}
        for node in nodes:
            if node.rule == "defineConst":
                defined.add(node.payload["name"].key())
            elif node.rule == "defineTypeOp":
                defined.add(node.payload["abs"].key())
                defined.add(node.payload["rep"].key())
        uses: dict[tuple, tuple[Name, list]] = {}

        def add(c: Const) -> None:
            key = c.name.key()
            if key in defined:
                return
            if key not in uses:
                uses[key] = (c.name, [])
            uses[key][1].append(c.ty)

        def walk_term(t) -> None:
            while True:
                if isinstance(t, Const):
                    add(t)
                    return
                if isinstance(t, App):
                    walk_term(t.fun)
                    t = t.arg
                    continue
                if isinstance(t, Abs):
                    t = t.body
                    continue
                return

        def walk_payload(value) -> None:
            if isinstance(value, (Var, Const, Abs, App)):
                walk_term(value)
            elif isinstance(value, Substitution):
                for _, image in value.tm_map:
                    walk_term(image)
            elif isinstance(value, (tuple, list)):
                for v in value:
                    walk_payload(v)

        for i in sorted(self.reachable):
            thm = self.thms[i]
            for t in thm.hyps + (thm.concl,):
                walk_term(t)
            for value in nodes[i].payload.values():
                walk_payload(value)
        for node in nodes:
            # definition bodies are translated whether exported or not
            if node.rule == "defineConst":
                walk_term(node.payload["term"])
        for key, (n, instances) in uses.items():
            self.extern_generic[key] = _lgg(instances)

    def translate(self) -> LpModule:
        self._replay()
        self._plan()
        self._scan_externals()
        nodes = self.result.trace.nodes
        m = self.module_name

        export_ident: dict[int, str] = {}
        for i, e in enumerate(self.result.exports):
            export_ident.setdefault(e.theorem.trace, f"{m}_proof_{i + 1}")

        imported_nodes: set[int] = set()
        for nid in sorted(self.shared):
            rule = nodes[nid].rule
            if rule == "axiom":
                key = sequent_key(self.thms[nid].hyps, self.thms[nid].concl)
                imported = self.imports.get(key)
                if imported is not None:
                    self.named[nid] = imported
                    imported_nodes.add(nid)
                    continue
            self.named[nid] = self.table.fresh(
                export_ident.get(nid)
                or (f"{m}_axm_{nid}" if rule == "axiom" else f"{m}_step_{nid}"))

        for node in nodes:
            nid = node.id
            if node.rule == "defineConst":
                pay = node.payload
                ident = self.table.ident(pay["name"])
                t = pay["term"]
                generic = type_of(t)
                tyvs = tuple(sorted(type_vars(generic),
                                    key=lambda x: x.key()))
                venv = {("ty", a.key()): LpVar(self.tyvar_ident(a))
                        for a in tyvs}
                self._local_used = set()
                lp_ty: LpTerm = _term(self.trans_type(generic, venv))
                body = self.trans_term(t, venv)
                for a in reversed(tyvs):
                    lp_ty = LpPi(self.tyvar_ident(a), LpVar("type"), lp_ty)
                    body = LpLam(self.tyvar_ident(a), LpVar("type"), body)
                self.decls.append(LpDef(ident, lp_ty, body))
                self.consts[pay["name"].key()] = (ident, generic, tyvs)
                if nid in self.named and nid in self.reachable:
                    self._emit_named(nid, self.named[nid])
            elif node.rule == "defineTypeOp" and nid in self.reachable:
                self._emit_dtop(nid)
            elif nid in self.named and nid in self.reachable:
                if node.rule == "axiom":
                    if nid not in imported_nodes:
                        self._emit_axiom(nid)
                else:
                    self._emit_named(nid, self.named[nid])

        # duplicate exports of one theorem become aliases of the first
        seen: dict[int, str] = {}
        for i, e in enumerate(self.result.exports):
            nid = e.theorem.trace
            want = f"{m}_proof_{i + 1}"
            if nid not in seen:
                seen[nid] = self.named[nid]
                continue
            thm = self.thms[nid]
            tyvs, tmvs = self.params[nid]
            venv = self._base_venv(tyvs, tmvs)
            self._local_used = set()
            env = {alpha_key(h): LpVar(f"_h{j + 1}")
                   for j, h in enumerate(thm.hyps)}
            args: list[LpTerm] = [venv[("ty", a.key())] for a in tyvs]
            args += [venv[("tm", _var_key(v))] for v in tmvs]
            args += [env[alpha_key(h)] for h in thm.hyps]
            self.decls.append(LpDef(
                self.table.fresh(want),
                self._sequent_type(thm, tyvs, tmvs, venv),
                self._wrap_params(lp_app(LpVar(seen[nid]), *args),
                                  thm, tyvs, tmvs, venv)))

        return LpModule(self.module_name, self.dependencies,
                        tuple(self.decls))


def translate_package(result: ArticleResult, package: str,
                      imports: Optional[dict] = None,
                      dependencies: tuple[str, ...] = ("prelude",)
                      ) -> LpModule:
    """Translate a replayed article into a module named after the package."""
    return Translator(result, package, imports, dependencies).translate()


def export_idents(module: LpModule) -> list[str]:
    """Identifiers of the module's exported proofs, in export order."""
    prefix = f"{module.name}_proof_"
    out = [d.name for d in module.declarations
           if isinstance(d, (LpDef, LpConst)) and d.name.startswith(prefix)]
    out.sort(key=lambda s: int(s[len(prefix):]))
    return out


# ---------------------------------------------------------------------------
# Emission

def _fmt(t: LpTerm, pos: str) -> str:
    if isinstance(t, LpSort):
        return "Type"
    if isinstance(t, LpVar):
        return t.name
    if isinstance(t, LpApp):
        s = f"{_fmt(t.fun, 'head')} {_fmt(t.arg, 'atom')}"
        return f"({s})" if pos == "atom" else s
    if isinstance(t, LpLam):
        s = f"{t.name} : {_fmt(t.ann, 'ann')} => {_fmt(t.body, 'open')}"
        return s if pos == "open" else f"({s})"
    if t.name is None:
        s = f"{_fmt(t.dom, 'ann')} -> {_fmt(t.cod, 'open')}"
    else:
        s = f"{t.name} : {_fmt(t.dom, 'ann')} -> {_fmt(t.cod, 'open')}"
    return s if pos == "open" else f"({s})"


def emit_module(m: LpModule) -> str:
    lines = [f"#NAME {m.name}."]
    for dep in m.dependencies:
        lines.append(f"#REQUIRE {dep}.")
    for d in m.declarations:
        if isinstance(d, LpConst):
            lines.append(f"{d.name} : {_fmt(d.ty, 'open')}.")
        elif isinstance(d, LpDef):
            lines.append(f"def {d.name} : {_fmt(d.ty, 'open')} := "
                         f"{_fmt(d.body, 'open')}.")
        else:
            ctx = ", ".join(d.ctx)
            lines.append(f"[{ctx}] {_fmt(d.lhs, 'ann')} --> "
                         f"{_fmt(d.rhs, 'open')}.")
    return "\n".join(lines) + "\n"
