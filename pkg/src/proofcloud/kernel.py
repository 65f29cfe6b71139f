"""Trusted inference core for a higher-order logic with rank-1 polymorphism.

Everything the rest of the system believes about a proof is funneled through
the `Kernel` class below: theorems can only be produced by its rule methods,
each of which validates its side conditions and appends one node to an
append-only proof trace.  Terms and types are immutable values; hypothesis
sets are kept canonical (deduplicated modulo alpha-equivalence, sorted by a
deterministic term ordering) so sequent comparison is structural.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union


class KernelError(Exception):
    """Base class for rule violations raised by the kernel."""


class IllTyped(KernelError):
    pass


class NotBoolean(KernelError):
    pass


class RuleMismatch(KernelError):
    pass


class FreeVarInHyps(KernelError):
    pass


class TypeMismatch(KernelError):
    pass


class IllFormedSubst(KernelError):
    pass


class NotARedex(KernelError):
    pass


class Redefinition(KernelError):
    pass


class OpenTerm(KernelError):
    pass


class NonEmptyHyps(KernelError):
    pass


class TyVarMismatch(KernelError):
    pass


# ---------------------------------------------------------------------------
# Names

@dataclass(frozen=True)
class Name:
    """Namespaced symbol: a tuple of namespace components plus a base name."""

    components: tuple[str, ...]
    base: str

    def key(self) -> tuple:
        return (self.components, self.base)

    def __str__(self) -> str:
        return ".".join(self.components + (self.base,))


def name(dotted: str) -> Name:
    """Build a Name from a plain dotted string (no escape handling)."""
    parts = dotted.split(".")
    return Name(tuple(parts[:-1]), parts[-1])


# ---------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class TyVar:
    name: Name


@dataclass(frozen=True)
class TyApp:
    op: Name
    args: tuple["HolType", ...]


HolType = Union[TyVar, TyApp]

ARROW = name("->")
BOOL_OP = name("bool")
IND_OP = name("ind")
EQ_NAME = name("=")
SELECT_NAME = name("select")

BOOL = TyApp(BOOL_OP, ())
IND = TyApp(IND_OP, ())


def mk_fun(dom: HolType, cod: HolType) -> TyApp:
    return TyApp(ARROW, (dom, cod))


def dest_fun(ty: HolType) -> Optional[tuple[HolType, HolType]]:
    if isinstance(ty, TyApp) and ty.op == ARROW and len(ty.args) == 2:
        return ty.args[0], ty.args[1]
    return None


def type_key(ty: HolType) -> tuple:
    if isinstance(ty, TyVar):
        return (0, ty.name.key())
    return (1, ty.op.key(), tuple(type_key(a) for a in ty.args))


def type_vars(ty: HolType) -> set[Name]:
    if isinstance(ty, TyVar):
        return {ty.name}
    out: set[Name] = set()
    for a in ty.args:
        out |= type_vars(a)
    return out


def inst_type(ty_map: dict[Name, HolType], ty: HolType) -> HolType:
    if not ty_map:
        return ty
    if isinstance(ty, TyVar):
        return ty_map.get(ty.name, ty)
    args = tuple(inst_type(ty_map, a) for a in ty.args)
    return ty if args == ty.args else TyApp(ty.op, args)


# ---------------------------------------------------------------------------
# Terms

@dataclass(frozen=True)
class Var:
    name: Name
    ty: HolType


@dataclass(frozen=True)
class Const:
    name: Name
    ty: HolType


@dataclass(frozen=True)
class Abs:
    var: Var
    body: "HolTerm"


@dataclass(frozen=True)
class App:
    fun: "HolTerm"
    arg: "HolTerm"


HolTerm = Union[Var, Const, Abs, App]


def type_of(t: HolTerm) -> HolType:
    """Compute the type, raising IllTyped on an application mismatch."""
    if isinstance(t, (Var, Const)):
        return t.ty
    if isinstance(t, Abs):
        return mk_fun(t.var.ty, type_of(t.body))
    fty = type_of(t.fun)
    arrow = dest_fun(fty)
    if arrow is None:
        raise IllTyped(f"application head has non-function type {fty}")
    dom, cod = arrow
    aty = type_of(t.arg)
    if dom != aty:
        raise IllTyped(f"argument type {aty} does not match domain {dom}")
    return cod


def mk_app(f: HolTerm, x: HolTerm) -> App:
    t = App(f, x)
    type_of(t)
    return t


def mk_abs(v: Var, body: HolTerm) -> Abs:
    return Abs(v, body)


def eq_const(ty: HolType) -> Const:
    return Const(EQ_NAME, mk_fun(ty, mk_fun(ty, BOOL)))


def mk_eq(lhs: HolTerm, rhs: HolTerm) -> App:
    ty = type_of(lhs)
    rty = type_of(rhs)
    if ty != rty:
        raise IllTyped(f"equation sides have types {ty} and {rty}")
    return App(App(eq_const(ty), lhs), rhs)


def dest_eq(t: HolTerm) -> Optional[tuple[HolTerm, HolTerm, HolType]]:
    """Split `lhs = rhs` returning (lhs, rhs, operand type), or None."""
    if (
        isinstance(t, App)
        and isinstance(t.fun, App)
        and isinstance(t.fun.fun, Const)
        and t.fun.fun.name == EQ_NAME
    ):
        arrow = dest_fun(t.fun.fun.ty)
        if arrow is not None:
            return t.fun.arg, t.arg, arrow[0]
    return None


def free_vars(t: HolTerm) -> set[Var]:
    out: set[Var] = set()
    stack: list[tuple[HolTerm, tuple[Var, ...]]] = [(t, ())]
    while stack:
        cur, bound = stack.pop()
        if isinstance(cur, Var):
            if cur not in bound:
                out.add(cur)
        elif isinstance(cur, App):
            stack.append((cur.fun, bound))
            stack.append((cur.arg, bound))
        elif isinstance(cur, Abs):
            stack.append((cur.body, bound + (cur.var,)))
    return out


def term_type_vars(t: HolTerm) -> set[Name]:
    out: set[Name] = set()
    stack: list[HolTerm] = [t]
    while stack:
        cur = stack.pop()
        if isinstance(cur, (Var, Const)):
            out |= type_vars(cur.ty)
        elif isinstance(cur, App):
            stack.append(cur.fun)
            stack.append(cur.arg)
        else:
            out |= type_vars(cur.var.ty)
            stack.append(cur.body)
    return out


def alpha_key(t: HolTerm) -> tuple:
    """Canonical nameless key: alpha-equivalent terms get equal keys.

    Bound variables turn into binder distances, free variables keep their
    names; types are compared structurally.  The key doubles as the
    deterministic term ordering used for hypothesis sets.
    """

    def go(t: HolTerm, env: dict[Var, int], depth: int) -> tuple:
        if isinstance(t, Var):
            lvl = env.get(t)
            if lvl is not None:
                return (0, depth - lvl, type_key(t.ty))
            return (1, t.name.key(), type_key(t.ty))
        if isinstance(t, Const):
            return (2, t.name.key(), type_key(t.ty))
        if isinstance(t, App):
            return (3, go(t.fun, env, depth), go(t.arg, env, depth))
        old = env.get(t.var)
        env[t.var] = depth
        body = go(t.body, env, depth + 1)
        if old is None:
            del env[t.var]
        else:
            env[t.var] = old
        return (4, type_key(t.var.ty), body)

    return go(t, {}, 0)


def alpha_equal(a: HolTerm, b: HolTerm) -> bool:
    return alpha_key(a) == alpha_key(b)


def _fresh_name(base: Name, forbidden: set[Name]) -> Name:
    cand = Name(base.components, base.base + "'")
    while cand in forbidden:
        cand = Name(cand.components, cand.base + "'")
    return cand


def subst_term(m: dict[Var, HolTerm], t: HolTerm) -> HolTerm:
    """Simultaneous capture-avoiding substitution of variables by terms.

    Binders that would capture a free variable of an incoming term are
    renamed with primed fresh names (x -> x', x'' ...).
    """
    if not m:
        return t

    def go(t: HolTerm, m: dict[Var, HolTerm]) -> HolTerm:
        if isinstance(t, Var):
            return m.get(t, t)
        if isinstance(t, Const):
            return t
        if isinstance(t, App):
            return App(go(t.fun, m), go(t.arg, m))
        v = t.var
        fv_body = free_vars(t.body)
        relevant = {k: r for k, r in m.items() if k != v and k in fv_body}
        if not relevant:
            return t
        incoming: set[Var] = set()
        for r in relevant.values():
            incoming |= free_vars(r)
        if v in incoming:
            forbidden = {u.name for u in fv_body} | {u.name for u in incoming}
            v2 = Var(_fresh_name(v.name, forbidden), v.ty)
            relevant[v] = v2
            return Abs(v2, go(t.body, relevant))
        return Abs(v, go(t.body, relevant))

    return go(t, m)


def inst_term(ty_map: dict[Name, HolType], t: HolTerm) -> HolTerm:
    """Apply a type substitution through a term.

    Instantiation can identify a binder with a previously distinct free
    variable of the body (same name, types collapsing to the same image);
    such binders are renamed first.
    """
    if not ty_map:
        return t

    def go(t: HolTerm) -> HolTerm:
        if isinstance(t, Var):
            return Var(t.name, inst_type(ty_map, t.ty))
        if isinstance(t, Const):
            return Const(t.name, inst_type(ty_map, t.ty))
        if isinstance(t, App):
            return App(go(t.fun), go(t.arg))
        v = t.var
        v_img = Var(v.name, inst_type(ty_map, v.ty))
        fv_body = free_vars(t.body)
        clash = any(
            u != v and u.name == v.name and inst_type(ty_map, u.ty) == v_img.ty
            for u in fv_body
        )
        if clash:
            forbidden = {u.name for u in fv_body}
            v2 = Var(_fresh_name(v.name, forbidden), v.ty)
            body = subst_term({v: v2}, t.body)
            return Abs(Var(v2.name, v_img.ty), go(body))
        return Abs(v_img, go(t.body))

    return go(t)


def type_match(pattern: HolType, concrete: HolType, binding: dict[Name, HolType]) -> bool:
    """First-order type matching: extend `binding` so pattern maps onto concrete."""
    if isinstance(pattern, TyVar):
        seen = binding.get(pattern.name)
        if seen is None:
            binding[pattern.name] = concrete
            return True
        return seen == concrete
    if isinstance(concrete, TyApp) and pattern.op == concrete.op and len(pattern.args) == len(concrete.args):
        return all(type_match(p, c, binding) for p, c in zip(pattern.args, concrete.args))
    return False


def alpha_match_tyinst(pattern: HolTerm, t: HolTerm) -> Optional[dict[Name, HolType]]:
    """Match `t` against `pattern` up to alpha and type instantiation.

    Term structure must agree exactly (free variables and constants by name);
    type variables of the pattern may be instantiated consistently.  Returns
    the type binding on success, None otherwise.
    """
    binding: dict[Name, HolType] = {}

    def go(p: HolTerm, t: HolTerm, env: dict[Var, int], tenv: dict[Var, int], depth: int) -> bool:
        if isinstance(p, Var) and isinstance(t, Var):
            pl, tl = env.get(p), tenv.get(t)
            if (pl is None) != (tl is None):
                return False
            if pl is not None and pl != tl:
                return False
            if pl is None and p.name != t.name:
                return False
            return type_match(p.ty, t.ty, binding)
        if isinstance(p, Const) and isinstance(t, Const):
            return p.name == t.name and type_match(p.ty, t.ty, binding)
        if isinstance(p, App) and isinstance(t, App):
            return go(p.fun, t.fun, env, tenv, depth) and go(p.arg, t.arg, env, tenv, depth)
        if isinstance(p, Abs) and isinstance(t, Abs):
            if not type_match(p.var.ty, t.var.ty, binding):
                return False
            old_p, old_t = env.get(p.var), tenv.get(t.var)
            env[p.var] = depth
            tenv[t.var] = depth
            ok = go(p.body, t.body, env, tenv, depth + 1)
            if old_p is None:
                del env[p.var]
            else:
                env[p.var] = old_p
            if old_t is None:
                del tenv[t.var]
            else:
                tenv[t.var] = old_t
            return ok
        return False

    if go(pattern, t, {}, {}, 0):
        return binding
    return None


# ---------------------------------------------------------------------------
# Substitutions

@dataclass(frozen=True)
class Substitution:
    """Type map applied first, then a simultaneous term map.

    A term-map entry ((x, A), r) replaces the variable (x, applyTy(tyMap, A))
    in the type-instantiated theorem; r must already have that type.
    """

    ty_map: tuple[tuple[Name, HolType], ...] = ()
    tm_map: tuple[tuple[Var, HolTerm], ...] = ()

    def ty_dict(self) -> dict[Name, HolType]:
        return dict(self.ty_map)

    def is_empty(self) -> bool:
        return not self.ty_map and not self.tm_map


# ---------------------------------------------------------------------------
# Proof traces

@dataclass(frozen=True)
class TraceNode:
    id: int
    rule: str
    premises: tuple[int, ...]
    payload: dict


class ProofTrace:
    """Append-only DAG of rule invocations; premises always point backwards."""

    def __init__(self) -> None:
        self.nodes: list[TraceNode] = []
        self.annotations: list[tuple[int, str]] = []

    def add(self, rule: str, premises: tuple[int, ...], payload: dict) -> int:
        nid = len(self.nodes)
        for p in premises:
            if p < 0 or p >= nid:
                raise KernelError("trace premise out of range")
        self.nodes.append(TraceNode(nid, rule, premises, payload))
        return nid

    def annotate(self, text: str) -> None:
        self.annotations.append((len(self.nodes), text))

    def __len__(self) -> int:
        return len(self.nodes)


# ---------------------------------------------------------------------------
# Theorems

@dataclass(frozen=True)
class Theorem:
    hyps: tuple[HolTerm, ...]
    concl: HolTerm
    trace: int


def canonical_hyps(hyps: Iterable[HolTerm]) -> tuple[HolTerm, ...]:
    by_key: dict[tuple, HolTerm] = {}
    for h in hyps:
        by_key.setdefault(alpha_key(h), h)
    return tuple(by_key[k] for k in sorted(by_key))


def sequent_key(hyps: Iterable[HolTerm], concl: HolTerm) -> tuple:
    return (tuple(sorted(alpha_key(h) for h in hyps)), alpha_key(concl))


def remove_hyp(hyps: tuple[HolTerm, ...], gone: HolTerm) -> tuple[HolTerm, ...]:
    k = alpha_key(gone)
    return tuple(h for h in hyps if alpha_key(h) != k)


# ---------------------------------------------------------------------------
# The kernel

GENERIC_A = TyVar(name("A"))
EQ_GENERIC = mk_fun(GENERIC_A, mk_fun(GENERIC_A, BOOL))
SELECT_GENERIC = mk_fun(mk_fun(GENERIC_A, BOOL), GENERIC_A)


class Kernel:
    """Rule checker and proof-trace builder.

    `version` selects the shapes returned by defineTypeOp (5 or 6); all other
    rules behave identically in both modes.
    """

    def __init__(self, version: int = 5) -> None:
        if version not in (5, 6):
            raise KernelError(f"unsupported kernel version {version}")
        self.version = version
        self.trace = ProofTrace()
        self.type_ops: dict[Name, int] = {ARROW: 2, BOOL_OP: 0, IND_OP: 0}
        self.constants: dict[Name, HolType] = {EQ_NAME: EQ_GENERIC, SELECT_NAME: SELECT_GENERIC}
        self.assumptions: dict[tuple, Theorem] = {}

    # -- helpers ------------------------------------------------------------

    def _thm(self, rule: str, premises: tuple[Theorem, ...], payload: dict,
             hyps: Iterable[HolTerm], concl: HolTerm) -> Theorem:
        nid = self.trace.add(rule, tuple(p.trace for p in premises), payload)
        return Theorem(canonical_hyps(hyps), concl, nid)

    @staticmethod
    def _dest_eq_concl(d: Theorem, rule: str) -> tuple[HolTerm, HolTerm, HolType]:
        eq = dest_eq(d.concl)
        if eq is None:
            raise RuleMismatch(f"{rule}: conclusion is not an equation")
        return eq

    # -- primitive rules ----------------------------------------------------

    def refl(self, t: HolTerm) -> Theorem:
        concl = mk_eq(t, t)
        return self._thm("refl", (), {"term": t}, (), concl)

    def assume(self, phi: HolTerm) -> Theorem:
        if type_of(phi) != BOOL:
            raise NotBoolean("assume: term is not boolean")
        return self._thm("assume", (), {"term": phi}, (phi,), phi)

    def eq_mp(self, d1: Theorem, d2: Theorem) -> Theorem:
        lhs, rhs, ty = self._dest_eq_concl(d1, "eqMp")
        if ty != BOOL:
            raise RuleMismatch("eqMp: equation is not at bool")
        if not alpha_equal(lhs, d2.concl):
            raise RuleMismatch("eqMp: second premise does not match left side")
        return self._thm("eqMp", (d1, d2), {}, d1.hyps + d2.hyps, rhs)

    def abs_thm(self, v: Var, d: Theorem) -> Theorem:
        lhs, rhs, _ = self._dest_eq_concl(d, "absThm")
        for h in d.hyps:
            if v in free_vars(h):
                raise FreeVarInHyps("absThm: bound variable free in a hypothesis")
        concl = mk_eq(Abs(v, lhs), Abs(v, rhs))
        return self._thm("absThm", (d,), {"var": v}, d.hyps, concl)

    def app_thm(self, d1: Theorem, d2: Theorem) -> Theorem:
        f, g, fty = self._dest_eq_concl(d1, "appThm")
        x, y, xty = self._dest_eq_concl(d2, "appThm")
        arrow = dest_fun(fty)
        if arrow is None:
            raise RuleMismatch("appThm: first equation is not at a function type")
        if arrow[0] != xty:
            raise TypeMismatch("appThm: domain does not match argument type")
        concl = mk_eq(App(f, x), App(g, y))
        return self._thm("appThm", (d1, d2), {}, d1.hyps + d2.hyps, concl)

    def deduct_antisym(self, d1: Theorem, d2: Theorem) -> Theorem:
        hyps = remove_hyp(d1.hyps, d2.concl) + remove_hyp(d2.hyps, d1.concl)
        concl = mk_eq(d1.concl, d2.concl)
        return self._thm("deductAntisym", (d1, d2), {}, hyps, concl)

    def subst(self, s: Substitution, d: Theorem) -> Theorem:
        ty_map = s.ty_dict()
        tm: dict[Var, HolTerm] = {}
        for (v, r) in s.tm_map:
            want = inst_type(ty_map, v.ty)
            got = type_of(r)
            if got != want:
                raise IllFormedSubst(
                    f"subst: replacement for {v.name} has type {got}, expected {want}"
                )
            tm[Var(v.name, want)] = r

        def apply(t: HolTerm) -> HolTerm:
            return subst_term(tm, inst_term(ty_map, t))

        hyps = tuple(apply(h) for h in d.hyps)
        concl = apply(d.concl)
        return self._thm("subst", (d,), {"subst": s}, hyps, concl)

    def beta_conv(self, t: HolTerm) -> Theorem:
        if not (isinstance(t, App) and isinstance(t.fun, Abs)):
            raise NotARedex("betaConv: term is not a beta redex")
        contractum = subst_term({t.fun.var: t.arg}, t.fun.body)
        return self._thm("betaConv", (), {"term": t}, (), mk_eq(t, contractum))

    def define_const(self, c_name: Name, t: HolTerm) -> tuple[Const, Theorem]:
        if c_name in self.constants:
            raise Redefinition(f"constant {c_name} already defined")
        if free_vars(t):
            raise OpenTerm("defineConst: body has free term variables")
        ty = type_of(t)
        if not term_type_vars(t) <= type_vars(ty):
            raise TyVarMismatch("defineConst: body type variable missing from its type")
        self.constants[c_name] = ty
        c = Const(c_name, ty)
        thm = self._thm("defineConst", (), {"name": c_name, "term": t}, (), mk_eq(c, t))
        return c, thm

    def define_type_op(self, op_name: Name, abs_name: Name, rep_name: Name,
                       ty_vars: tuple[Name, ...], d: Theorem) -> tuple:
        """Introduce a type operator from a nonempty-subset witness `|- phi t`.

        Returns (TyApp template info is in the signature): the new operator
        name, abs/rep constants and the two bijection theorems, shaped by the
        kernel version.
        """
        if d.hyps:
            raise NonEmptyHyps("defineTypeOp: witness has hypotheses")
        if not isinstance(d.concl, App):
            raise RuleMismatch("defineTypeOp: conclusion is not a predicate application")
        phi, witness = d.concl.fun, d.concl.arg
        if free_vars(d.concl):
            raise OpenTerm("defineTypeOp: witness has free term variables")
        if len(set(ty_vars)) != len(ty_vars):
            raise TyVarMismatch("defineTypeOp: repeated type variable")
        if set(ty_vars) != term_type_vars(phi):
            raise TyVarMismatch("defineTypeOp: listed type variables differ from the predicate's")
        if op_name in self.type_ops:
            raise Redefinition(f"type operator {op_name} already defined")
        for n in (abs_name, rep_name):
            if n in self.constants:
                raise Redefinition(f"constant {n} already defined")

        rep_ty = type_of(witness)
        new_ty = TyApp(op_name, tuple(TyVar(v) for v in ty_vars))
        abs_c = Const(abs_name, mk_fun(rep_ty, new_ty))
        rep_c = Const(rep_name, mk_fun(new_ty, rep_ty))
        self.type_ops[op_name] = len(ty_vars)
        self.constants[abs_name] = abs_c.ty
        self.constants[rep_name] = rep_c.ty

        a = Var(name("a"), new_ty)
        r = Var(name("r"), rep_ty)
        abs_rep = App(abs_c, App(rep_c, a))          # abs (rep a)
        rep_abs_eq = mk_eq(App(rep_c, App(abs_c, r)), r)  # rep (abs r) = r
        payload = {
            "op": op_name, "abs": abs_name, "rep": rep_name,
            "tyVars": ty_vars, "version": self.version,
        }
        if self.version == 5:
            abs_concl = mk_eq(abs_rep, a)
            rep_concl = mk_eq(App(phi, r), rep_abs_eq)
        else:
            abs_concl = mk_eq(Abs(a, abs_rep), Abs(a, a))
            rep_concl = mk_eq(Abs(r, rep_abs_eq), Abs(r, App(phi, r)))
        abs_thm = self._thm("defineTypeOp", (d,), dict(payload, tag="abs"), (), abs_concl)
        rep_thm = self._thm("defineTypeOp", (d,), dict(payload, tag="rep"), (), rep_concl)
        return op_name, abs_c, rep_c, abs_thm, rep_thm

    # -- version-6 rules ----------------------------------------------------

    def sym(self, d: Theorem) -> Theorem:
        lhs, rhs, _ = self._dest_eq_concl(d, "sym")
        return self._thm("sym", (d,), {}, d.hyps, mk_eq(rhs, lhs))

    def trans(self, d1: Theorem, d2: Theorem) -> Theorem:
        a, b1, ty1 = self._dest_eq_concl(d1, "trans")
        b2, c, ty2 = self._dest_eq_concl(d2, "trans")
        if ty1 != ty2 or not alpha_equal(b1, b2):
            raise RuleMismatch("trans: middle terms do not agree")
        return self._thm("trans", (d1, d2), {}, d1.hyps + d2.hyps, mk_eq(a, c))

    def prove_hyp(self, d1: Theorem, d2: Theorem) -> Theorem:
        hyps = d1.hyps + remove_hyp(d2.hyps, d1.concl)
        return self._thm("proveHyp", (d1, d2), {}, hyps, d2.concl)

    # -- assumptions ----------------------------------------------------------

    def axiom(self, hyps: Iterable[HolTerm], concl: HolTerm) -> Theorem:
        hyps = tuple(hyps)
        for t in hyps + (concl,):
            if type_of(t) != BOOL:
                raise NotBoolean("axiom: sequent contains a non-boolean term")
        thm = self._thm("axiom", (), {"hyps": hyps, "concl": concl}, hyps, concl)
        self.assumptions.setdefault(sequent_key(thm.hyps, thm.concl), thm)
        return thm


# ---------------------------------------------------------------------------
# Derived rules: the version-6 primitives rebuilt from the version-5 core.
# Used both by admissibility tests and when serializing traces for readers
# that lack the newer rules.

def derive_sym(k: Kernel, d: Theorem) -> Theorem:
    lhs, rhs, ty = dest_eq(d.concl) or (None, None, None)
    if lhs is None:
        raise RuleMismatch("derive_sym: conclusion is not an equation")
    refl_l = k.refl(lhs)
    eq_fn = k.refl(eq_const(ty))
    th1 = k.app_thm(eq_fn, d)          # (=) lhs = (=) rhs
    th2 = k.app_thm(th1, refl_l)       # (lhs = lhs) = (rhs = lhs)
    return k.eq_mp(th2, refl_l)        # rhs = lhs


def derive_trans(k: Kernel, d1: Theorem, d2: Theorem) -> Theorem:
    a, b1, ty = dest_eq(d1.concl) or (None, None, None)
    if a is None or dest_eq(d2.concl) is None:
        raise RuleMismatch("derive_trans: conclusion is not an equation")
    b2, _, ty2 = dest_eq(d2.concl)
    if ty != ty2 or not alpha_equal(b1, b2):
        raise RuleMismatch("derive_trans: middle terms do not agree")
    holder = k.refl(App(eq_const(ty), a))   # (=) a = (=) a
    th1 = k.app_thm(holder, d2)             # (a = b) = (a = c)
    return k.eq_mp(th1, d1)                 # a = c


def derive_prove_hyp(k: Kernel, d1: Theorem, d2: Theorem) -> Theorem:
    eq = k.deduct_antisym(d1, d2)           # phi = psi
    return k.eq_mp(eq, d1)                  # psi under Gamma u (Delta - {phi})


def derive_type_op_eta(k: Kernel, abs_v5: Theorem, rep_v5: Theorem) -> tuple[Theorem, Theorem]:
    """Turn version-5 bijection theorems into the version-6 eta-expanded pair."""
    lhs, rhs, _ = dest_eq(abs_v5.concl)
    a = rhs
    if not isinstance(a, Var):
        raise RuleMismatch("derive_type_op_eta: unexpected abs theorem shape")
    abs_v6 = k.abs_thm(a, abs_v5)           # (\a. abs (rep a)) = (\a. a)
    phi_r, rep_eq, _ = dest_eq(rep_v5.concl)
    r = rep_eq.arg
    if not isinstance(r, Var):
        raise RuleMismatch("derive_type_op_eta: unexpected rep theorem shape")
    flipped = derive_sym(k, rep_v5)         # (rep (abs r) = r) = phi r
    rep_v6 = k.abs_thm(r, flipped)          # (\r. rep (abs r) = r) = (\r. phi r)
    return abs_v6, rep_v6


def derive_type_op_plain(k: Kernel, abs_v6: Theorem, rep_v6: Theorem) -> tuple[Theorem, Theorem]:
    """Recover version-5 bijection theorems from the eta-expanded pair."""
    lam_abs, lam_id, _ = dest_eq(abs_v6.concl)
    a = lam_id.var
    applied = k.app_thm(abs_v6, k.refl(a))          # (\a. abs (rep a)) a = (\a. a) a
    b1 = k.beta_conv(App(lam_abs, a))               # (\a. abs (rep a)) a = abs (rep a)
    b2 = k.beta_conv(App(lam_id, a))                # (\a. a) a = a
    abs_v5 = k.trans(k.trans(k.sym(b1), applied), b2) if k.version == 6 else \
        derive_trans(k, derive_trans(k, derive_sym(k, b1), applied), b2)

    lam_eq, lam_phi, _ = dest_eq(rep_v6.concl)
    r = lam_phi.var
    applied = k.app_thm(rep_v6, k.refl(r))          # (\r. rep (abs r) = r) r = (\r. phi r) r
    b1 = k.beta_conv(App(lam_eq, r))                # ... r = (rep (abs r) = r)
    b2 = k.beta_conv(App(lam_phi, r))               # (\r. phi r) r = phi r
    if k.version == 6:
        chain = k.trans(k.trans(k.sym(b1), applied), b2)   # (rep (abs r) = r) = phi r
        rep_v5 = k.sym(chain)
    else:
        chain = derive_trans(k, derive_trans(k, derive_sym(k, b1), applied), b2)
        rep_v5 = derive_sym(k, chain)
    return abs_v5, rep_v5


# ---------------------------------------------------------------------------
# Pretty printing (used on exported pages and in diagnostics)

def type_text(ty: HolType, prec: int = 0) -> str:
    if isinstance(ty, TyVar):
        return str(ty.name)
    arrow = dest_fun(ty)
    if arrow is not None:
        s = f"{type_text(arrow[0], 1)} -> {type_text(arrow[1], 0)}"
        return f"({s})" if prec > 0 else s
    if not ty.args:
        return str(ty.op)
    s = str(ty.op) + " " + " ".join(type_text(a, 2) for a in ty.args)
    return f"({s})" if prec > 1 else s


def term_text(t: HolTerm, prec: int = 0) -> str:
    """Minimal-parentheses rendering: infix `=`, `\\x : ty.` lambdas,
    left-associative application."""
    eq = dest_eq(t)
    if eq is not None:
        s = f"{term_text(eq[0], 1)} = {term_text(eq[1], 1)}"
        return f"({s})" if prec > 0 else s
    if isinstance(t, Var):
        return str(t.name)
    if isinstance(t, Const):
        return str(t.name)
    if isinstance(t, Abs):
        s = f"\\{t.var.name} : {type_text(t.var.ty)}. {term_text(t.body, 0)}"
        return f"({s})" if prec > 0 else s
    s = f"{term_text(t.fun, 1)} {term_text(t.arg, 2)}"
    return f"({s})" if prec > 1 else s


def sequent_text(thm: Theorem) -> str:
    if thm.hyps:
        return ", ".join(term_text(h) for h in thm.hyps) + " |- " + term_text(thm.concl)
    return "|- " + term_text(thm.concl)
