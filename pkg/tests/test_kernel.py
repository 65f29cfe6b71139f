"""Per-rule behavior of the inference core, checked against independent oracles."""

import pytest

from proofcloud.kernel import (
    Abs, App, BOOL, Const, FreeVarInHyps, IllFormedSubst, IllTyped, Kernel,
    NonEmptyHyps, NotARedex, NotBoolean, OpenTerm, Redefinition, RuleMismatch,
    Substitution, TyApp, TypeMismatch, TyVar, TyVarMismatch, Var, alpha_equal,
    alpha_key, dest_eq, free_vars, mk_eq, mk_fun, name, type_of,
)
from support import alpha_oracle, db_subst_oracle, db_term, hyp_keys

A = TyVar(name("A"))


def bvar(n: str) -> Var:
    return Var(name(n), BOOL)


def avar(n: str) -> Var:
    return Var(name(n), A)


@pytest.fixture
def k() -> Kernel:
    return Kernel(version=5)


# -- typeOf -------------------------------------------------------------------

def test_type_of_variable():
    assert type_of(bvar("x")) == BOOL


def test_type_of_identity_abstraction():
    x = avar("x")
    assert type_of(Abs(x, x)) == mk_fun(A, A)


def test_type_of_applied_identity():
    # hand derivation: x:A |- x:A, so \x. x : A -> A, applied to y:A gives A
    x, y = avar("x"), avar("y")
    assert type_of(App(Abs(x, x), y)) == A


def test_type_of_operand_mismatch():
    x = avar("x")
    with pytest.raises(IllTyped):
        type_of(App(Abs(x, x), bvar("y")))


# -- alphaEqual ---------------------------------------------------------------

def test_alpha_bound_rename():
    t = Abs(avar("x"), avar("x"))
    u = Abs(avar("y"), avar("y"))
    assert alpha_equal(t, u)
    assert alpha_oracle(t, u)


def test_alpha_type_mismatch():
    t = Abs(avar("x"), avar("x"))
    u = Abs(bvar("x"), bvar("x"))
    assert not alpha_equal(t, u)
    assert not alpha_oracle(t, u)


def test_alpha_swapped_binders():
    t = Abs(avar("x"), Abs(avar("y"), avar("x")))
    u = Abs(avar("y"), Abs(avar("x"), avar("y")))
    assert alpha_equal(t, u)
    assert alpha_oracle(t, u)


def test_alpha_distinguishes_free_variables():
    assert not alpha_equal(avar("x"), avar("y"))


# -- refl ---------------------------------------------------------------------

def test_refl_variable(k):
    d = k.refl(bvar("x"))
    assert d.hyps == ()
    assert d.concl == mk_eq(bvar("x"), bvar("x"))


def test_refl_abstraction(k):
    t = Abs(avar("x"), avar("x"))
    d = k.refl(t)
    assert d.concl == mk_eq(t, t)


def test_refl_trace_node_via_replay():
    from proofcloud.article import replay

    art = '"x"\n"bool"\ntypeOp\nnil\nopType\nvar\nvarTerm\nrefl\npop\n'
    r = replay(art)
    assert len(r.trace.nodes) == 1
    node = r.trace.nodes[0]
    assert node.rule == "refl"
    assert node.premises == ()


# -- assume -------------------------------------------------------------------

def test_assume_variable(k):
    p = bvar("p")
    d = k.assume(p)
    assert d.hyps == (p,)
    assert d.concl == p


def test_assume_application(k):
    fx = App(Var(name("f"), mk_fun(BOOL, BOOL)), bvar("x"))
    d = k.assume(fx)
    assert d.hyps == (fx,)
    assert d.concl == fx


def test_assume_non_boolean(k):
    with pytest.raises(NotBoolean):
        k.assume(avar("x"))


# -- eqMp ---------------------------------------------------------------------

def test_eq_mp_identity_rewrite(k):
    p = bvar("p")
    d = k.eq_mp(k.refl(p), k.assume(p))
    assert d.hyps == (p,)
    assert d.concl == p


def test_eq_mp_hypothesis_union(k):
    h, kk, p, q = bvar("h"), bvar("k"), bvar("p"), bvar("q")
    d1 = k.axiom([h], mk_eq(p, q))
    d2 = k.axiom([kk], p)
    d = k.eq_mp(d1, d2)
    # oracle: explicit set enumeration of the expected hypotheses
    assert hyp_keys(d) == {db_term(h), db_term(kk)}
    assert d.concl == q


def test_eq_mp_misaligned_conclusion(k):
    p, q, r = bvar("p"), bvar("q"), bvar("r")
    with pytest.raises(RuleMismatch):
        k.eq_mp(k.axiom([], mk_eq(p, q)), k.axiom([], r))


def test_eq_mp_requires_equality(k):
    p = bvar("p")
    with pytest.raises(RuleMismatch):
        k.eq_mp(k.assume(p), k.assume(p))


# -- absThm -------------------------------------------------------------------

def test_abs_thm_identity(k):
    x = avar("x")
    d = k.abs_thm(x, k.refl(x))
    assert d.concl == mk_eq(Abs(x, x), Abs(x, x))
    assert d.hyps == ()


def test_abs_thm_free_in_hypothesis(k):
    x, y = bvar("x"), bvar("y")
    d = k.assume(mk_eq(x, y))
    with pytest.raises(FreeVarInHyps):
        k.abs_thm(x, d)


def test_abs_thm_under_hypothesis(k):
    p, y = bvar("p"), avar("y")
    f = Var(name("f"), mk_fun(A, BOOL))
    g = Var(name("g"), mk_fun(A, BOOL))
    d = k.axiom([p], mk_eq(App(f, y), App(g, y)))
    # free-variable scan oracle: the abstracted variable is not free in hyps
    assert y not in {v for h in d.hyps for v in free_vars(h)}
    out = k.abs_thm(y, d)
    assert out.hyps == (p,)
    assert out.concl == mk_eq(Abs(y, App(f, y)), Abs(y, App(g, y)))


# -- appThm -------------------------------------------------------------------

def test_app_thm_refl_pair(k):
    f = Var(name("f"), mk_fun(A, A))
    a = avar("a")
    d = k.app_thm(k.refl(f), k.refl(a))
    assert d.concl == mk_eq(App(f, a), App(f, a))


def test_app_thm_hypothesis_union(k):
    h, kk = bvar("h"), bvar("k")
    f = Var(name("f"), mk_fun(A, BOOL))
    g = Var(name("g"), mk_fun(A, BOOL))
    a, b = avar("a"), avar("b")
    d = k.app_thm(k.axiom([h], mk_eq(f, g)), k.axiom([kk], mk_eq(a, b)))
    assert hyp_keys(d) == {db_term(h), db_term(kk)}
    assert d.concl == mk_eq(App(f, a), App(g, b))
    assert type_of(d.concl) == BOOL


def test_app_thm_domain_mismatch(k):
    f = Var(name("f"), mk_fun(A, BOOL))
    with pytest.raises(TypeMismatch):
        k.app_thm(k.refl(f), k.refl(bvar("p")))


def test_app_thm_non_function(k):
    with pytest.raises(RuleMismatch):
        k.app_thm(k.refl(bvar("p")), k.refl(bvar("q")))


# -- deductAntisym ------------------------------------------------------------

def test_deduct_antisym_self(k):
    p = bvar("p")
    d = k.deduct_antisym(k.assume(p), k.assume(p))
    assert d.hyps == ()
    assert d.concl == mk_eq(p, p)


def test_deduct_antisym_cross_discharge(k):
    p, q = bvar("p"), bvar("q")
    d1 = k.axiom([q], p)
    d2 = k.axiom([p], q)
    d = k.deduct_antisym(d1, d2)
    # set-difference oracle
    expect = (hyp_keys(d1) - {db_term(q)}) | (hyp_keys(d2) - {db_term(p)})
    assert hyp_keys(d) == expect == set()
    assert d.concl == mk_eq(p, q)


def test_deduct_antisym_nothing_to_remove(k):
    p, q = bvar("p"), bvar("q")
    d = k.deduct_antisym(k.axiom([], p), k.axiom([], q))
    assert d.hyps == ()
    assert d.concl == mk_eq(p, q)


# -- subst --------------------------------------------------------------------

def test_subst_type_instantiation(k):
    x = avar("x")
    d = k.subst(Substitution(ty_map=((name("A"), BOOL),), tm_map=()), k.refl(x))
    xb = bvar("x")
    assert d.concl == mk_eq(xb, xb)


def test_subst_term_replacement(k):
    x, y = bvar("x"), bvar("y")
    fy = App(Var(name("f"), mk_fun(BOOL, BOOL)), y)
    d = k.subst(Substitution(ty_map=(), tm_map=((x, fy),)), k.assume(x))
    assert d.hyps == (fy,)
    assert d.concl == fy


def test_subst_capture_renames_binder(k):
    x, y, a = bvar("x"), bvar("y"), bvar("a")
    concl = mk_eq(App(Abs(y, x), a), x)
    d = k.axiom([], concl)
    out = k.subst(Substitution(ty_map=(), tm_map=((x, y),)), d)
    assert db_term(out.concl) == db_subst_oracle({x: y}, concl)
    # the binder really was renamed, not just reused
    lam = out.concl.fun.arg.fun
    assert isinstance(lam, Abs) and lam.var.name != y.name


def test_subst_ill_formed_binding(k):
    x = bvar("x")
    with pytest.raises(IllFormedSubst):
        k.subst(Substitution(ty_map=(), tm_map=((x, avar("y")),)), k.assume(x))


# -- betaConv -----------------------------------------------------------------

def test_beta_conv_identity(k):
    x, y = avar("x"), avar("y")
    redex = App(Abs(x, x), y)
    d = k.beta_conv(redex)
    assert d.concl == mk_eq(redex, y)


def test_beta_conv_constant_body(k):
    x, y, z = avar("x"), avar("y"), avar("z")
    redex = App(Abs(x, z), y)
    d = k.beta_conv(redex)
    assert d.concl == mk_eq(redex, z)


def test_beta_conv_renames_on_capture(k):
    x, y = bvar("x"), bvar("y")
    redex = App(Abs(x, Abs(y, x)), y)
    d = k.beta_conv(redex)
    rhs = d.concl.arg
    assert db_term(rhs) == db_subst_oracle({x: y}, Abs(y, x))
    assert isinstance(rhs, Abs) and rhs.var.name != y.name
    assert rhs.body == y


def test_beta_conv_not_a_redex(k):
    with pytest.raises(NotARedex):
        k.beta_conv(bvar("x"))


# -- defineConst --------------------------------------------------------------

def test_define_const_returns_definition(k):
    p = bvar("p")
    body = mk_eq(Abs(p, p), Abs(p, p))
    c, d = k.define_const(name("true-ish"), body)
    assert c == Const(name("true-ish"), BOOL)
    assert d.hyps == ()
    assert d.concl == mk_eq(c, body)


def test_define_const_rejects_open_terms(k):
    with pytest.raises(OpenTerm):
        k.define_const(name("bad"), bvar("x"))


def test_define_const_rejects_redefinition(k):
    body = Abs(bvar("p"), bvar("p"))
    k.define_const(name("twice"), body)
    with pytest.raises(Redefinition):
        k.define_const(name("twice"), body)


def test_define_const_requires_type_vars_in_type(k):
    # closed bool body mentioning A only under the binder: the defined
    # constant's type would forget a type variable of the definition
    x, p = avar("x"), bvar("p")
    closed = mk_eq(Abs(p, p), Abs(p, p))
    with pytest.raises(TyVarMismatch):
        k.define_const(name("leaky"), App(Abs(x, closed), Const(name("w"), A)))


# -- defineTypeOp -------------------------------------------------------------

def _witness(k: Kernel):
    x = bvar("x")
    phi = Abs(x, x)
    tru = Const(name("tru"), BOOL)
    return k.axiom([], App(phi, tru)), phi, tru


def test_define_type_op_v5_shapes():
    k = Kernel(version=5)
    d, phi, tru = _witness(k)
    op, absc, repc, abs_thm, rep_thm = k.define_type_op(
        name("uni"), name("uni.abs"), name("uni.rep"), (), d)
    new_ty = TyApp(name("uni"), ())
    a = Var(name("a"), new_ty)
    r = Var(name("r"), BOOL)
    assert abs_thm.concl == mk_eq(App(absc, App(repc, a)), a)
    assert rep_thm.concl == mk_eq(App(phi, r), mk_eq(App(repc, App(absc, r)), r))
    assert abs_thm.hyps == () and rep_thm.hyps == ()
    assert dest_eq(abs_thm.concl) is not None


def test_define_type_op_v6_shapes():
    k = Kernel(version=6)
    d, phi, tru = _witness(k)
    op, absc, repc, abs_thm, rep_thm = k.define_type_op(
        name("uni"), name("uni.abs"), name("uni.rep"), (), d)
    new_ty = TyApp(name("uni"), ())
    a = Var(name("a"), new_ty)
    r = Var(name("r"), BOOL)
    assert abs_thm.concl == mk_eq(Abs(a, App(absc, App(repc, a))), Abs(a, a))
    assert rep_thm.concl == mk_eq(
        Abs(r, mk_eq(App(repc, App(absc, r)), r)), Abs(r, App(phi, r)))


def test_define_type_op_rejects_hypotheses(k):
    x = bvar("x")
    d = k.assume(App(Abs(x, x), bvar("y")))
    with pytest.raises(NonEmptyHyps):
        k.define_type_op(name("t"), name("t.a"), name("t.r"), (), d)


def test_define_type_op_ty_var_mismatch(k):
    x = avar("x")
    phi = Abs(x, mk_eq(x, x))
    d = k.axiom([], App(phi, Const(name("w"), A)))
    with pytest.raises(TyVarMismatch):
        k.define_type_op(name("t"), name("t.a"), name("t.r"), (), d)


# -- sym / trans / proveHyp ---------------------------------------------------

def test_sym_fixpoint_on_refl():
    k = Kernel(version=6)
    x = bvar("x")
    d = k.sym(k.refl(x))
    assert d.concl == mk_eq(x, x)


def test_sym_swaps_sides_keeps_hyps():
    k = Kernel(version=6)
    h, a, b = bvar("h"), avar("a"), avar("b")
    d = k.sym(k.axiom([h], mk_eq(a, b)))
    assert d.hyps == (h,)
    assert d.concl == mk_eq(b, a)


def test_sym_requires_equality():
    k = Kernel(version=6)
    with pytest.raises(RuleMismatch):
        k.sym(k.axiom([], bvar("p")))


def test_trans_on_refl():
    k = Kernel(version=6)
    a = avar("a")
    d = k.trans(k.refl(a), k.refl(a))
    assert d.concl == mk_eq(a, a)


def test_trans_chains_hypotheses():
    k = Kernel(version=6)
    h, kk, a, b, c = bvar("h"), bvar("k"), avar("a"), avar("b"), avar("c")
    d = k.trans(k.axiom([h], mk_eq(a, b)), k.axiom([kk], mk_eq(b, c)))
    assert hyp_keys(d) == {db_term(h), db_term(kk)}
    assert d.concl == mk_eq(a, c)


def test_trans_middle_mismatch():
    k = Kernel(version=6)
    a, b, c, e = avar("a"), avar("b"), avar("c"), avar("e")
    with pytest.raises(RuleMismatch):
        k.trans(k.axiom([], mk_eq(a, b)), k.axiom([], mk_eq(c, e)))


def test_prove_hyp_discharges():
    k = Kernel(version=6)
    p, q = bvar("p"), bvar("q")
    d = k.prove_hyp(k.axiom([], p), k.axiom([p], q))
    assert d.hyps == ()
    assert d.concl == q


def test_prove_hyp_set_arithmetic():
    k = Kernel(version=6)
    h, kk, p, q = bvar("h"), bvar("k"), bvar("p"), bvar("q")
    d = k.prove_hyp(k.axiom([h], p), k.axiom([p, kk], q))
    assert hyp_keys(d) == {db_term(h), db_term(kk)}
    assert d.concl == q


def test_prove_hyp_no_op_removal():
    k = Kernel(version=6)
    p, q, r = bvar("p"), bvar("q"), bvar("r")
    d = k.prove_hyp(k.axiom([], p), k.axiom([r], q))
    assert d.hyps == (r,)
    assert d.concl == q


# -- axiom --------------------------------------------------------------------

def test_axiom_records_assumption(k):
    x = avar("x")
    ext = mk_eq(Abs(x, x), Abs(x, x))
    d = k.axiom([], ext)
    assert len(k.assumptions) == 1
    assert d.hyps == () and d.concl == ext
    assert k.trace.nodes[d.trace].rule == "axiom"


def test_axiom_rejects_non_boolean(k):
    with pytest.raises(NotBoolean):
        k.axiom([], avar("x"))


def test_axiom_twice_one_assumption_two_leaves(k):
    p = bvar("p")
    k.axiom([], p)
    k.axiom([], p)
    assert len(k.assumptions) == 1
    leaves = [n for n in k.trace.nodes if n.rule == "axiom"]
    assert len(leaves) == 2


# -- module invariants --------------------------------------------------------

def test_hypotheses_stay_canonical(k):
    p = bvar("p")
    q = Abs(bvar("u"), bvar("u"))
    qq = Abs(bvar("v"), bvar("v"))  # alpha-equal twin
    d = k.axiom([p, App(q, p), App(qq, p)], p)
    assert len(d.hyps) == 2  # duplicates merged modulo alpha
    assert list(d.hyps) == sorted(d.hyps, key=alpha_key)


def test_empty_substitution_is_identity(k):
    p, q = bvar("p"), bvar("q")
    d = k.axiom([p], mk_eq(p, q))
    out = k.subst(Substitution(ty_map=(), tm_map=()), d)
    assert out.hyps == d.hyps
    assert out.concl == d.concl


def test_beta_then_eq_mp_yields_contractum(k):
    x, y = bvar("x"), bvar("y")
    redex = App(Abs(x, mk_eq(x, x)), y)
    d = k.eq_mp(k.beta_conv(redex), k.assume(redex))
    assert d.concl == mk_eq(y, y)
    assert d.hyps == (redex,)


def test_theorem_only_via_kernel():
    # the trace grows once per rule invocation and never rewrites history
    k = Kernel(version=5)
    p = bvar("p")
    k.assume(p)
    k.refl(p)
    assert [n.id for n in k.trace.nodes] == [0, 1]
    for n in k.trace.nodes:
        assert all(pr < n.id for pr in n.premises)
