"""Independent oracles for the test suite.

Everything here re-derives expected answers from first principles (de Bruijn
representations, brute-force scans, plain set arithmetic) without touching the
implementation's own alpha/substitution machinery, so agreement is meaningful.
"""

from __future__ import annotations

from proofcloud.kernel import Abs, App, Const, HolTerm, HolType, TyApp, TyVar, Var


def db_type(ty: HolType):
    if isinstance(ty, TyVar):
        return ("tv", str(ty.name))
    return ("top", str(ty.op), tuple(db_type(a) for a in ty.args))


def db_term(t: HolTerm, env: tuple = ()):
    """Nameless form: bound variables become indices, free ones keep names."""
    if isinstance(t, Var):
        key = (str(t.name), db_type(t.ty))
        for i, entry in enumerate(reversed(env)):
            if entry == key:
                return ("b", i)
        return ("f",) + key
    if isinstance(t, Const):
        return ("c", str(t.name), db_type(t.ty))
    if isinstance(t, App):
        return ("a", db_term(t.fun, env), db_term(t.arg, env))
    key = (str(t.var.name), db_type(t.var.ty))
    return ("l", db_type(t.var.ty), db_term(t.body, env + (key,)))


def alpha_oracle(a: HolTerm, b: HolTerm) -> bool:
    return db_term(a) == db_term(b)


def db_lift(d, by: int, cutoff: int = 0):
    """Shift indices >= cutoff upward by `by` (standard de Bruijn lifting)."""
    tag = d[0]
    if tag == "b":
        return ("b", d[1] + by) if d[1] >= cutoff else d
    if tag in ("f", "c"):
        return d
    if tag == "a":
        return ("a", db_lift(d[1], by, cutoff), db_lift(d[2], by, cutoff))
    return ("l", d[1], db_lift(d[2], by, cutoff + 1))


def db_subst(d, mapping: dict, depth: int = 0):
    """Simultaneous substitution of free variables in nameless form.

    `mapping` sends (name, db_type) keys to nameless replacement terms; each
    replacement is lifted by the binder depth at the occurrence, which is the
    whole capture-avoidance story in this representation.
    """
    tag = d[0]
    if tag == "f":
        repl = mapping.get((d[1], d[2]))
        return db_lift(repl, depth) if repl is not None else d
    if tag in ("b", "c"):
        return d
    if tag == "a":
        return ("a", db_subst(d[1], mapping, depth), db_subst(d[2], mapping, depth))
    return ("l", d[1], db_subst(d[2], mapping, depth + 1))


def db_subst_oracle(m: dict[Var, HolTerm], t: HolTerm):
    """Expected nameless form of `t` after substituting per `m`."""
    mapping = {(str(v.name), db_type(v.ty)): db_term(r) for v, r in m.items()}
    return db_subst(db_term(t), mapping)


def hyp_keys(thm) -> frozenset:
    """A theorem's hypothesis set as alpha-classes, via the oracle encoding."""
    return frozenset(db_term(h) for h in thm.hyps)


def sequent_oracle(thm) -> tuple:
    return (hyp_keys(thm), db_term(thm.concl))
