"""Classification, sizes, package statistics, and the dependency graph."""

import json
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from proofcloud.analyzer import (
    Classification, CyclicDependency, DependencyGraph, LemmaInfo, PackageMeta,
    PackageStats, ProofRecord, UnknownLemma, alpha_match_tyinst,
    analyze_corpus, analyze_package, classify, default_choice_pattern,
    dependency_graph, export_table, load_choice_pattern, load_corpus,
    package_stats, proof_size, term_from_json, term_text, term_to_json,
    type_from_json, type_to_json,
)
from proofcloud.kernel import (
    Abs, App, BOOL, Const, Kernel, TyVar, Var, inst_term, mk_eq, mk_fun, name,
    sequent_key,
)

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"

CHOICE = default_choice_pattern()


@pytest.fixture(scope="module")
def corpus():
    results, metas = load_corpus(CORPUS)
    analyses, graph = analyze_corpus(results, metas, strict=True)
    return results, metas, analyses, graph


def _bool_var(n: str) -> Var:
    return Var(name(n), BOOL)


# -- pretty printing ------------------------------------------------------------

def test_choice_pattern_prints_in_standard_notation():
    assert term_text(CHOICE) == "!P x. P x ==> P (select P)"


def test_printer_parenthesizes_nested_equations():
    p = _bool_var("p")
    t = mk_eq(mk_eq(p, p), mk_eq(p, p))
    assert term_text(t) == "(p = p) = (p = p)"


def test_printer_renders_applications_and_lambdas():
    x = _bool_var("x")
    t = _bool_var("t")
    assert term_text(App(Abs(x, x), t)) == "(\\x. x) t"


# -- choice pattern serialization ------------------------------------------------

def test_choice_pattern_round_trips_through_json():
    doc = term_to_json(CHOICE)
    assert term_from_json(json.loads(json.dumps(doc))) == CHOICE


def test_type_json_round_trip():
    ty = mk_fun(TyVar(name("A")), BOOL)
    assert type_from_json(type_to_json(ty)) == ty


def test_load_choice_pattern_from_file(tmp_path):
    path = tmp_path / "pattern.json"
    path.write_text(json.dumps(term_to_json(CHOICE)), encoding="utf-8")
    assert load_choice_pattern(path) == CHOICE


# -- alpha matching up to type instantiation --------------------------------------

def test_pattern_matches_itself():
    assert alpha_match_tyinst(CHOICE, CHOICE)


def test_pattern_matches_type_instance():
    inst = inst_term({name("A"): BOOL}, CHOICE)
    assert inst != CHOICE
    assert alpha_match_tyinst(CHOICE, inst)


def test_pattern_matches_renamed_binders():
    inst = inst_term({name("A"): BOOL}, CHOICE)
    q = Var(name("Q"), mk_fun(BOOL, BOOL))
    renamed = inst
    # rebuild with the outer binder renamed P -> Q
    outer = inst.arg
    renamed = App(inst.fun, Abs(q, _rename(outer.body, outer.var, q)))
    assert alpha_match_tyinst(CHOICE, renamed)


def _rename(t, old, new):
    if t == old:
        return new
    if isinstance(t, App):
        return App(_rename(t.fun, old, new), _rename(t.arg, old, new))
    if isinstance(t, Abs):
        if t.var == old:
            return t
        return Abs(t.var, _rename(t.body, old, new))
    return t


def test_pattern_rejects_different_constant():
    p = _bool_var("p")
    assert not alpha_match_tyinst(CHOICE, mk_eq(p, p))


def test_instance_does_not_match_general_pattern_reversed():
    # matching is one-directional: the concrete side cannot generalize
    inst = inst_term({name("A"): BOOL}, CHOICE)
    assert not alpha_match_tyinst(inst, CHOICE)


# -- proof size -------------------------------------------------------------------

def test_size_of_refl_only_export_is_one():
    k = Kernel(version=5)
    d = k.refl(_bool_var("p"))
    assert proof_size(k.trace, d.trace) == 1


def test_size_counts_three_nodes_for_eqmp_pair():
    k = Kernel(version=5)
    t = _bool_var("t")
    d1 = k.refl(t)                  # |- t = t
    d2 = k.assume(t)                # t |- t
    out = k.eq_mp(d1, d2)           # t |- t
    assert proof_size(k.trace, out.trace) == 3


def test_shared_subderivation_counts_once():
    k = Kernel(version=5)
    shared = k.assume(_bool_var("p"))
    top = k.deduct_antisym(shared, shared)
    # brute-force oracle: enumerate the reachable ids explicitly
    byid = {n.id: n for n in k.trace.nodes}
    seen = set()
    work = [top.trace]
    while work:
        i = work.pop()
        if i not in seen:
            seen.add(i)
            work.extend(byid[i].premises)
    assert proof_size(k.trace, top.trace) == len(seen) == 2


def test_size_invariant_under_renumbering():
    k = Kernel(version=5)
    t = _bool_var("t")
    d = k.eq_mp(k.refl(t), k.assume(t))
    base = proof_size(k.trace, d.trace)

    from types import SimpleNamespace

    shifted = SimpleNamespace(nodes=[
        SimpleNamespace(id=n.id + 7, premises=tuple(p + 7 for p in n.premises),
                        rule=n.rule, payload=n.payload)
        for n in k.trace.nodes])
    assert proof_size(shifted, d.trace + 7) == base


def test_size_monotone_under_reachable_extension():
    k = Kernel(version=5)
    t = _bool_var("t")
    d = k.refl(t)
    before = proof_size(k.trace, d.trace)
    d2 = k.deduct_antisym(d, k.assume(mk_eq(t, t)))
    assert proof_size(k.trace, d2.trace) >= before


# -- classify ---------------------------------------------------------------------

def test_direct_choice_use_is_classical():
    k = Kernel(version=5)
    ax = k.axiom([], CHOICE)
    d = k.deduct_antisym(ax, ax)
    c = classify(k.trace, d.trace)
    assert c.classical
    assert term_text(CHOICE) in c.axioms_used
    assert c.classical_lemmas == () and c.constructive_lemmas == ()


def test_refl_beta_only_proof_is_constructive():
    k = Kernel(version=5)
    x = _bool_var("x")
    d = k.beta_conv(App(Abs(x, x), _bool_var("q")))
    c = classify(k.trace, d.trace)
    assert not c.classical
    assert c.axioms_used == ()
    assert c.classical_lemmas == () and c.constructive_lemmas == ()


def test_unreachable_axiom_does_not_change_classification():
    k = Kernel(version=5)
    d = k.refl(_bool_var("p"))
    before = classify(k.trace, d.trace)
    k.axiom([], CHOICE)  # added to the trace, unreachable from d
    after = classify(k.trace, d.trace)
    assert before == after and not after.classical


def test_lemma_table_resolves_boundary_nodes():
    k = Kernel(version=5)
    imported = mk_eq(_bool_var("p"), _bool_var("p"))
    ax = k.axiom([], imported)
    d = k.deduct_antisym(ax, ax)
    table = {sequent_key((), imported): LemmaInfo(
        name="borrowed", package="dep", classical=False, axioms_used=())}
    c = classify(k.trace, d.trace, lemma_table=table, strict=True)
    assert not c.classical
    assert c.constructive_lemmas == ("borrowed",)


def test_classical_lemma_propagates_with_inherited_axiom():
    k = Kernel(version=5)
    imported = mk_eq(_bool_var("p"), _bool_var("p"))
    ax = k.axiom([], imported)
    d = k.deduct_antisym(ax, k.refl(_bool_var("q")))
    table = {sequent_key((), imported): LemmaInfo(
        name="tainted", package="dep", classical=True,
        axioms_used=(term_text(CHOICE),))}
    c = classify(k.trace, d.trace, lemma_table=table)
    assert c.classical
    assert c.classical_lemmas == ("tainted",)
    assert term_text(CHOICE) in c.axioms_used


def test_strict_mode_rejects_unknown_assumption():
    k = Kernel(version=5)
    stray = mk_eq(_bool_var("u"), _bool_var("u"))
    ax = k.axiom([], stray)
    with pytest.raises(UnknownLemma):
        classify(k.trace, ax.trace, strict=True)
    # the choice axiom itself stays acceptable under strict mode
    k2 = Kernel(version=5)
    ax2 = k2.axiom([], CHOICE)
    assert classify(k2.trace, ax2.trace, strict=True).classical


# -- package stats ----------------------------------------------------------------

def _record(name_: str, classical: bool, size: int) -> ProofRecord:
    return ProofRecord(
        name=name_, conclusion_text="p = p", package_name="pkg",
        classical=classical, axioms_used=(), constructive_lemmas=(),
        classical_lemmas=(), size=size, trace_id=0)


def test_stats_four_records_one_classical():
    meta = PackageMeta(name="pkg")
    recs = [_record("a", False, 1), _record("b", False, 2),
            _record("c", False, 3), _record("d", True, 4)]
    st_ = package_stats(recs, meta)
    assert st_.total_proofs == 4
    assert st_.classical_count == 1
    assert st_.constructive_count == 3
    assert st_.constructive_percentage == Fraction(75)
    assert st_.avg_constructive_size == Fraction(2)
    assert st_.avg_classical_size == Fraction(4)


def test_stats_empty_package_degenerate_case():
    st_ = package_stats([], PackageMeta(name="pkg"))
    assert st_.total_proofs == 0
    assert st_.constructive_percentage == Fraction(100)
    assert st_.avg_constructive_size is None
    assert st_.avg_classical_size is None
    assert "avg-constructive-size" not in st_.to_json()


@given(st.lists(st.tuples(st.booleans(), st.integers(1, 50)), max_size=30))
def test_stats_invariants_hold_for_random_records(flags):
    recs = [_record(f"r{i}", cl, sz) for i, (cl, sz) in enumerate(flags)]
    st_ = package_stats(recs, PackageMeta(name="pkg"))
    assert st_.constructive_count + st_.classical_count == st_.total_proofs
    assert 0 <= st_.constructive_percentage <= 100
    if st_.total_proofs:
        assert st_.constructive_percentage == Fraction(
            100 * st_.constructive_count, st_.total_proofs)
    if st_.avg_constructive_size is not None:
        assert st_.avg_constructive_size >= 1
    if st_.avg_classical_size is not None:
        assert st_.avg_classical_size >= 1


# -- dependency graph -------------------------------------------------------------

def _metas_from(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        return [PackageMeta.from_json(o) for o in json.load(fh)["packages"]]


def test_bundled_package_graph_has_exactly_nine_edges():
    graph = dependency_graph(_metas_from(FIXTURES / "graph-packages.json"))
    assert set(graph.edges) == {
        ("stream", "base"),
        ("natural-divides", "base"),
        ("natural-prime", "natural-divides"),
        ("natural-prime", "stream"),
        ("natural-fibonacci", "stream"),
        ("probability", "stream"),
        ("gfp", "natural-fibonacci"),
        ("natural-list", "probability"),
        ("modular", "natural-divides"),
    }
    assert len(graph.edges) == 9
    assert len(graph.nodes) == 9


def test_bundled_package_graph_topological_order():
    graph = dependency_graph(_metas_from(FIXTURES / "graph-packages.json"))
    pos = {n: i for i, n in enumerate(graph.load_order)}
    assert graph.load_order[0] == "base"  # everything ultimately rests on it
    for dependent, dependency in graph.edges:
        assert pos[dependency] < pos[dependent]


def test_single_package_graph():
    graph = dependency_graph([PackageMeta(name="solo")])
    assert graph.nodes == ("solo",)
    assert graph.edges == ()
    assert graph.load_order == ("solo",)


def test_cycle_raises_with_cycle_listed():
    metas = [PackageMeta(name="a", requires=("b",)),
             PackageMeta(name="b", requires=("a",))]
    with pytest.raises(CyclicDependency) as exc:
        dependency_graph(metas)
    assert set(exc.value.cycle) >= {"a", "b"}


def test_requirement_without_metadata_still_appears_as_node():
    graph = dependency_graph([PackageMeta(name="app", requires=("lib",))])
    assert graph.nodes == ("app", "lib")
    assert graph.load_order == ("lib", "app")


# -- the bundled corpus -------------------------------------------------------------

EXPECTED_PCT = {
    "pkg-logic": Fraction(100),
    "pkg-choice": Fraction(50),
    "pkg-middle": Fraction(50),
    "pkg-pure": Fraction(100),
    "pkg-mixed": Fraction(100),
    "pkg-top": Fraction(50),
}


def test_corpus_classical_counts_are_exact(corpus):
    _, _, analyses, _ = corpus
    assert set(analyses) == set(EXPECTED_PCT)
    total = sum(a.stats.total_proofs for a in analyses.values())
    classical = sum(a.stats.classical_count for a in analyses.values())
    assert total == 12 and classical == 3
    for pkg, pct in EXPECTED_PCT.items():
        assert analyses[pkg].stats.constructive_percentage == pct, pkg


def test_corpus_includes_direct_and_transitive_classicality(corpus):
    _, _, analyses, _ = corpus
    by_name = {r.name: r for a in analyses.values() for r in a.records}
    direct = by_name["choice-self-eq"]
    assert direct.classical and direct.classical_lemmas == ()
    assert term_text(CHOICE) in direct.axioms_used

    bridge = by_name["classical-bridge"]
    assert bridge.classical
    assert bridge.classical_lemmas == ("choice-self-eq",)
    assert term_text(CHOICE) in bridge.axioms_used

    top = by_name["top-bridge"]
    assert top.classical
    assert top.classical_lemmas == ("classical-bridge",)
    assert top.constructive_lemmas == ("fresh-refl",)
    assert term_text(CHOICE) in top.axioms_used


def test_corpus_totals_match_per_record_recount(corpus):
    _, _, analyses, _ = corpus
    for analysis in analyses.values():
        st_ = analysis.stats
        classical = [r for r in analysis.records if r.classical]
        constructive = [r for r in analysis.records if not r.classical]
        assert st_.classical_count == len(classical)
        assert st_.constructive_count == len(constructive)
        if constructive:
            assert st_.avg_constructive_size == Fraction(
                sum(r.size for r in constructive), len(constructive))
        if classical:
            assert st_.avg_classical_size == Fraction(
                sum(r.size for r in classical), len(classical))


def test_corpus_records_satisfy_classicality_invariant(corpus):
    _, _, analyses, _ = corpus
    choice_text = term_text(CHOICE)
    for analysis in analyses.values():
        for r in analysis.records:
            assert r.size >= 1
            assert r.classical == (
                choice_text in r.axioms_used or bool(r.classical_lemmas))


def test_corpus_graph_matches_declared_requires(corpus):
    _, metas, _, graph = corpus
    expected = {(m.name, req) for m in metas for req in m.requires}
    assert set(graph.edges) == expected
    pos = {n: i for i, n in enumerate(graph.load_order)}
    for dependent, dependency in graph.edges:
        assert pos[dependency] < pos[dependent]


def test_export_tables_key_by_sequent(corpus):
    results, metas, analyses, _ = corpus
    table = export_table(results["pkg-logic"], analyses["pkg-logic"])
    key = sequent_key((), mk_eq(_bool_var("p"), _bool_var("p")))
    assert table[key].name == "bool-refl"
    assert not table[key].classical


def test_fallback_names_follow_export_order(corpus):
    results, _, _, _ = corpus
    bare = PackageMeta(name="pkg-pure")
    analysis = analyze_package(results["pkg-pure"], bare)
    assert [r.name for r in analysis.records] == ["proof #1", "proof #2"]


def test_records_emit_expected_json_fields(corpus):
    _, _, analyses, graph = corpus
    rec = analyses["pkg-top"].records[0].to_json()
    assert set(rec) == {
        "name", "conclusion-text", "package-name", "classical", "axioms-used",
        "constructive-lemmas", "classical-lemmas", "size", "trace-id"}
    st_ = analyses["pkg-choice"].stats.to_json()
    assert {"package-name", "author", "subpackages", "date-retrieved",
            "total-proofs", "constructive-count", "classical-count",
            "constructive-percentage", "comments",
            "avg-constructive-size", "avg-classical-size"} == set(st_)
    assert st_["constructive-percentage"] == 50.0
    g = graph.to_json()
    assert set(g) == {"nodes", "edges", "load-order"}
