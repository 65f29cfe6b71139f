"""Per-proof and per-package analytics over replayed articles.

Classifies proofs as classical or constructive by walking their trace DAGs,
tracks which axioms and imported lemmas each proof rests on, measures proof
sizes, aggregates package statistics, and builds the package dependency
graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .article import ArticleResult, parse_name, quote_name, read_article_text, replay
from .kernel import (
    Abs, App, BOOL, Const, HolTerm, HolType, Name, TyApp, TyVar, Var, mk_fun,
    name, sequent_key, type_match,
)


class AnalyzerError(Exception):
    pass


class UnknownLemma(AnalyzerError):
    """Strict-mode import resolution failed for an assumed sequent."""


class CyclicDependency(AnalyzerError):
    def __init__(self, cycle: Sequence[str]):
        super().__init__("dependency cycle: " + " -> ".join(cycle))
        self.cycle = tuple(cycle)


# ---------------------------------------------------------------------------
# Term pretty-printing

_EQ = name("=")
_IMP = name("==>")
_ALL = name("!")

# precedence floors: anything below the context level gets parenthesized
_ATOM, _APP, _EQ_LV, _IMP_LV, _BIND = 40, 30, 20, 10, 0


def _binder_chain(t: HolTerm):
    """Collect !x y z. body sugar; returns (vars, body) or None."""
    cvars = []
    while (isinstance(t, App) and isinstance(t.fun, Const)
           and t.fun.name == _ALL and isinstance(t.arg, Abs)):
        cvars.append(t.arg.var)
        t = t.arg.body
    return (cvars, t) if cvars else None


def _fmt(t: HolTerm, level: int) -> str:
    if isinstance(t, Var):
        return str(t.name)
    if isinstance(t, Const):
        return str(t.name)
    chain = _binder_chain(t)
    if chain is not None:
        cvars, body = chain
        text = "!%s. %s" % (" ".join(str(v.name) for v in cvars),
                            _fmt(body, _BIND))
        return "(%s)" % text if level > _BIND else text
    if isinstance(t, Abs):
        text = "\\%s. %s" % (str(t.var.name), _fmt(t.body, _BIND))
        return "(%s)" % text if level > _BIND else text
    if isinstance(t.fun, App) and isinstance(t.fun.fun, Const):
        head = t.fun.fun.name
        if head == _EQ:
            text = "%s = %s" % (_fmt(t.fun.arg, _EQ_LV + 1),
                                _fmt(t.arg, _EQ_LV + 1))
            return "(%s)" % text if level > _EQ_LV else text
        if head == _IMP:
            text = "%s ==> %s" % (_fmt(t.fun.arg, _IMP_LV + 1),
                                  _fmt(t.arg, _IMP_LV))
            return "(%s)" % text if level > _IMP_LV else text
    text = "%s %s" % (_fmt(t.fun, _APP), _fmt(t.arg, _ATOM))
    return "(%s)" % text if level > _APP else text


def term_text(t: HolTerm) -> str:
    """Deterministic readable rendering used on proof pages."""
    return _fmt(t, _BIND)


# ---------------------------------------------------------------------------
# Term and type serialization (for the configurable choice pattern)

def type_to_json(ty: HolType):
    if isinstance(ty, TyVar):
        return {"v": quote_name(ty.name)[1:-1]}
    return {"op": quote_name(ty.op)[1:-1],
            "args": [type_to_json(a) for a in ty.args]}


def type_from_json(obj) -> HolType:
    if "v" in obj:
        return TyVar(parse_name(obj["v"]))
    return TyApp(parse_name(obj["op"]),
                 tuple(type_from_json(a) for a in obj["args"]))


def term_to_json(t: HolTerm):
    if isinstance(t, Var):
        return {"var": quote_name(t.name)[1:-1], "type": type_to_json(t.ty)}
    if isinstance(t, Const):
        return {"const": quote_name(t.name)[1:-1], "type": type_to_json(t.ty)}
    if isinstance(t, Abs):
        return {"abs": term_to_json(t.var), "body": term_to_json(t.body)}
    return {"app": term_to_json(t.fun), "arg": term_to_json(t.arg)}


def term_from_json(obj) -> HolTerm:
    if "var" in obj:
        return Var(parse_name(obj["var"]), type_from_json(obj["type"]))
    if "const" in obj:
        return Const(parse_name(obj["const"]), type_from_json(obj["type"]))
    if "abs" in obj:
        v = term_from_json(obj["abs"])
        if not isinstance(v, Var):
            raise AnalyzerError("abstraction binder must be a variable")
        return Abs(v, term_from_json(obj["body"]))
    return App(term_from_json(obj["app"]), term_from_json(obj["arg"]))


def default_choice_pattern() -> HolTerm:
    """!P x. P x ==> P (select P) over a type variable A."""
    a = TyVar(name("A"))
    pred = mk_fun(a, BOOL)
    p = Var(name("P"), pred)
    x = Var(name("x"), a)
    sel = Const(name("select"), mk_fun(pred, a))
    imp = Const(name("==>"), mk_fun(BOOL, mk_fun(BOOL, BOOL)))
    all_x = Const(name("!"), mk_fun(mk_fun(a, BOOL), BOOL))
    all_p = Const(name("!"), mk_fun(mk_fun(pred, BOOL), BOOL))
    body = App(App(imp, App(p, x)), App(p, App(sel, p)))
    return App(all_p, Abs(p, App(all_x, Abs(x, body))))


def load_choice_pattern(path: Union[str, Path]) -> HolTerm:
    with open(path, "r", encoding="utf-8") as fh:
        return term_from_json(json.load(fh))


# ---------------------------------------------------------------------------
# Alpha matching up to type instantiation

def alpha_match_tyinst(pattern: HolTerm, t: HolTerm) -> bool:
    """True when `t` is `pattern` with its type variables instantiated,
    up to renaming of bound variables."""
    binding: dict[Name, HolType] = {}

    def walk(p, s, penv, senv) -> bool:
        if isinstance(p, Var) and isinstance(s, Var):
            pk, sk = (p.name, p.ty), (s.name, s.ty)
            if (pk in penv) != (sk in senv):
                return False
            if pk in penv and penv[pk] != senv[sk]:
                return False
            if pk not in penv and p.name != s.name:
                return False
            return type_match(p.ty, s.ty, binding)
        if isinstance(p, Const) and isinstance(s, Const):
            return p.name == s.name and type_match(p.ty, s.ty, binding)
        if isinstance(p, App) and isinstance(s, App):
            return (walk(p.fun, s.fun, penv, senv)
                    and walk(p.arg, s.arg, penv, senv))
        if isinstance(p, Abs) and isinstance(s, Abs):
            if not type_match(p.var.ty, s.var.ty, binding):
                return False
            depth = len(penv)
            penv2 = dict(penv)
            senv2 = dict(senv)
            penv2[(p.var.name, p.var.ty)] = depth
            senv2[(s.var.name, s.var.ty)] = depth
            return walk(p.body, s.body, penv2, senv2)
        return False

    return walk(pattern, t, {}, {})


# ---------------------------------------------------------------------------
# Classification and sizes

@dataclass(frozen=True)
class LemmaInfo:
    """One imported theorem visible at a package boundary."""
    name: str
    package: str
    classical: bool
    axioms_used: tuple[str, ...]


@dataclass(frozen=True)
class Classification:
    classical: bool
    axioms_used: tuple[str, ...]
    classical_lemmas: tuple[str, ...]
    constructive_lemmas: tuple[str, ...]


def _nodes_by_id(trace) -> dict:
    return {n.id: n for n in trace.nodes}


def _reachable(byid: Mapping, theorem_id: int) -> set:
    seen: set = set()
    stack = [theorem_id]
    while stack:
        i = stack.pop()
        if i in seen:
            continue
        seen.add(i)
        stack.extend(byid[i].premises)
    return seen


def proof_size(trace, theorem_id: int) -> int:
    """Distinct inference nodes reachable from the theorem; shared
    sub-derivations count once."""
    return len(_reachable(_nodes_by_id(trace), theorem_id))


def classify(trace, theorem_id: int, choice_pattern: Optional[HolTerm] = None,
             lemma_table: Optional[Mapping] = None,
             strict: bool = False) -> Classification:
    """Walk the trace reachable from one theorem and decide classicality.

    Axiom leaves resolve, in order, to: an imported lemma recorded in
    `lemma_table` (keyed by sequent), the choice axiom (alpha match against
    `choice_pattern` up to type instantiation), or a plain named axiom.  In
    strict mode an unresolved non-choice leaf raises UnknownLemma.
    Classicality propagates through classical lemmas.
    """
    pattern = choice_pattern if choice_pattern is not None \
        else default_choice_pattern()
    table = lemma_table or {}
    byid = _nodes_by_id(trace)
    axioms: set = set()
    classical_lemmas: set = set()
    constructive_lemmas: set = set()
    classical = False
    for i in sorted(_reachable(byid, theorem_id)):
        node = byid[i]
        if node.rule != "axiom":
            continue
        hyps = node.payload["hyps"]
        concl = node.payload["concl"]
        info = table.get(sequent_key(hyps, concl))
        if info is not None:
            if info.classical:
                classical_lemmas.add(info.name)
                classical = True
            else:
                constructive_lemmas.add(info.name)
            axioms.update(info.axioms_used)
        elif not hyps and alpha_match_tyinst(pattern, concl):
            axioms.add(term_text(concl))
            classical = True
        elif strict:
            raise UnknownLemma(
                "assumed sequent matches no dependency export: "
                + term_text(concl))
        else:
            axioms.add(term_text(concl))
    return Classification(
        classical=classical,
        axioms_used=tuple(sorted(axioms)),
        classical_lemmas=tuple(sorted(classical_lemmas)),
        constructive_lemmas=tuple(sorted(constructive_lemmas)))


# ---------------------------------------------------------------------------
# Records and statistics

@dataclass(frozen=True)
class ProofRecord:
    name: str
    conclusion_text: str
    package_name: str
    classical: bool
    axioms_used: tuple[str, ...]
    constructive_lemmas: tuple[str, ...]
    classical_lemmas: tuple[str, ...]
    size: int
    trace_id: int

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "conclusion-text": self.conclusion_text,
            "package-name": self.package_name,
            "classical": self.classical,
            "axioms-used": list(self.axioms_used),
            "constructive-lemmas": list(self.constructive_lemmas),
            "classical-lemmas": list(self.classical_lemmas),
            "size": self.size,
            "trace-id": self.trace_id,
        }


@dataclass(frozen=True)
class PackageStats:
    package_name: str
    author: str
    subpackages: tuple[str, ...]
    date_retrieved: str
    total_proofs: int
    constructive_count: int
    classical_count: int
    constructive_percentage: Fraction
    avg_constructive_size: Optional[Fraction]
    avg_classical_size: Optional[Fraction]
    comments: str

    def to_json(self) -> dict:
        out = {
            "package-name": self.package_name,
            "author": self.author,
            "subpackages": list(self.subpackages),
            "date-retrieved": self.date_retrieved,
            "total-proofs": self.total_proofs,
            "constructive-count": self.constructive_count,
            "classical-count": self.classical_count,
            "constructive-percentage": float(self.constructive_percentage),
            "comments": self.comments,
        }
        if self.avg_constructive_size is not None:
            out["avg-constructive-size"] = float(self.avg_constructive_size)
        if self.avg_classical_size is not None:
            out["avg-classical-size"] = float(self.avg_classical_size)
        return out


@dataclass(frozen=True)
class VerificationRecord:
    engineer: str
    software: str
    translation_time_seconds: float
    verification_time_seconds: float
    pc_specification: str
    comments: str

    def to_json(self) -> dict:
        return {
            "engineer": self.engineer,
            "software": self.software,
            "translation-time-seconds": self.translation_time_seconds,
            "verification-time-seconds": self.verification_time_seconds,
            "pc-specification": self.pc_specification,
            "comments": self.comments,
        }


@dataclass(frozen=True)
class PackageMeta:
    name: str
    author: str = "unknown"
    subpackages: tuple[str, ...] = ()
    date_retrieved: str = ""
    requires: tuple[str, ...] = ()
    comments: str = ""
    theorems: tuple[str, ...] = ()

    @staticmethod
    def from_json(obj: dict) -> "PackageMeta":
        return PackageMeta(
            name=obj["name"],
            author=obj.get("author", "unknown"),
            subpackages=tuple(obj.get("subpackages", ())),
            date_retrieved=obj.get("date-retrieved", ""),
            requires=tuple(obj.get("requires", ())),
            comments=obj.get("comments", ""),
            theorems=tuple(obj.get("theorems", ())))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "author": self.author,
            "subpackages": list(self.subpackages),
            "date-retrieved": self.date_retrieved,
            "requires": list(self.requires),
            "comments": self.comments,
            "theorems": list(self.theorems),
        }


def record_from_json(obj: dict) -> ProofRecord:
    """Inverse of ProofRecord.to_json; unknown keys are ignored."""
    return ProofRecord(
        name=obj["name"],
        conclusion_text=obj["conclusion-text"],
        package_name=obj["package-name"],
        classical=obj["classical"],
        axioms_used=tuple(obj.get("axioms-used", ())),
        constructive_lemmas=tuple(obj.get("constructive-lemmas", ())),
        classical_lemmas=tuple(obj.get("classical-lemmas", ())),
        size=obj["size"],
        trace_id=obj["trace-id"])


def _opt_fraction(value) -> Optional[Fraction]:
    return None if value is None else Fraction(value)


def stats_from_json(obj: dict) -> PackageStats:
    return PackageStats(
        package_name=obj["package-name"],
        author=obj.get("author", "unknown"),
        subpackages=tuple(obj.get("subpackages", ())),
        date_retrieved=obj.get("date-retrieved", ""),
        total_proofs=obj["total-proofs"],
        constructive_count=obj["constructive-count"],
        classical_count=obj["classical-count"],
        constructive_percentage=Fraction(obj["constructive-percentage"]),
        avg_constructive_size=_opt_fraction(obj.get("avg-constructive-size")),
        avg_classical_size=_opt_fraction(obj.get("avg-classical-size")),
        comments=obj.get("comments", ""))


def verification_from_json(obj: dict) -> VerificationRecord:
    return VerificationRecord(
        engineer=obj["engineer"],
        software=obj["software"],
        translation_time_seconds=obj["translation-time-seconds"],
        verification_time_seconds=obj["verification-time-seconds"],
        pc_specification=obj["pc-specification"],
        comments=obj.get("comments", ""))


def package_stats(records: Sequence[ProofRecord],
                  meta: PackageMeta) -> PackageStats:
    """Aggregate one package's records; empty-class averages are absent and
    an empty package reports 100% constructive with zero totals visible."""
    total = len(records)
    classical = [r for r in records if r.classical]
    constructive = [r for r in records if not r.classical]
    if total:
        pct = Fraction(100 * len(constructive), total)
    else:
        pct = Fraction(100)

    def avg(rs):
        if not rs:
            return None
        return Fraction(sum(r.size for r in rs), len(rs))

    return PackageStats(
        package_name=meta.name,
        author=meta.author,
        subpackages=meta.subpackages,
        date_retrieved=meta.date_retrieved,
        total_proofs=total,
        constructive_count=len(constructive),
        classical_count=len(classical),
        constructive_percentage=pct,
        avg_constructive_size=avg(constructive),
        avg_classical_size=avg(classical),
        comments=meta.comments)


# ---------------------------------------------------------------------------
# Dependency graph

@dataclass(frozen=True)
class DependencyGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]  # (dependent, dependency)
    load_order: tuple[str, ...]  # dependencies before dependents

    def to_json(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [list(e) for e in self.edges],
            "load-order": list(self.load_order),
        }


def graph_from_json(obj: dict) -> DependencyGraph:
    return DependencyGraph(
        nodes=tuple(obj["nodes"]),
        edges=tuple((a, b) for a, b in obj["edges"]),
        load_order=tuple(obj["load-order"]))


def dependency_graph(metas: Sequence[PackageMeta]) -> DependencyGraph:
    nodes = set(m.name for m in metas)
    edges = set()
    for m in metas:
        for req in m.requires:
            nodes.add(req)
            edges.add((m.name, req))

    # Kahn with sorted tie-breaks, dependencies first
    out: dict[str, set] = {n: set() for n in nodes}  # dependency -> dependents
    indeg: dict[str, int] = {n: 0 for n in nodes}  # unmet requirements
    for dependent, dependency in edges:
        out[dependency].add(dependent)
        indeg[dependent] += 1
    ready = sorted(n for n in nodes if indeg[n] == 0)
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for d in sorted(out[n]):
            indeg[d] -= 1
            if indeg[d] == 0:
                ready.append(d)
        ready.sort()
    if len(order) != len(nodes):
        leftover = sorted(n for n in nodes if indeg[n] > 0)
        cycle = _find_cycle(leftover, edges)
        raise CyclicDependency(cycle)
    return DependencyGraph(tuple(sorted(nodes)), tuple(sorted(edges)),
                           tuple(order))


def _find_cycle(candidates, edges):
    req: dict[str, list] = {}
    for dependent, dependency in sorted(edges):
        req.setdefault(dependent, []).append(dependency)
    seen: set = set()
    path: list = []
    on_path: set = set()

    def dfs(n):
        if n in on_path:
            i = path.index(n)
            return path[i:] + [n]
        if n in seen:
            return None
        seen.add(n)
        path.append(n)
        on_path.add(n)
        for d in req.get(n, ()):
            found = dfs(d)
            if found:
                return found
        path.pop()
        on_path.remove(n)
        return None

    for n in candidates:
        found = dfs(n)
        if found:
            return found
    return candidates  # unreachable given a detected cycle


# ---------------------------------------------------------------------------
# Corpus orchestration

@dataclass(frozen=True)
class PackageAnalysis:
    meta: PackageMeta
    records: tuple[ProofRecord, ...]
    stats: PackageStats

    def to_json(self) -> dict:
        return {
            "meta": self.meta.to_json(),
            "records": [r.to_json() for r in self.records],
            "stats": self.stats.to_json(),
        }


def analysis_from_json(obj: dict) -> PackageAnalysis:
    return PackageAnalysis(
        meta=PackageMeta.from_json(obj["meta"]),
        records=tuple(record_from_json(r) for r in obj["records"]),
        stats=stats_from_json(obj["stats"]))


def analyze_package(result: ArticleResult, meta: PackageMeta,
                    lemma_table: Optional[Mapping] = None,
                    choice_pattern: Optional[HolTerm] = None,
                    strict: bool = False) -> PackageAnalysis:
    records = []
    for k, export in enumerate(result.exports, start=1):
        nm = meta.theorems[k - 1] if k - 1 < len(meta.theorems) \
            else f"proof #{k}"
        c = classify(result.trace, export.theorem.trace, choice_pattern,
                     lemma_table, strict)
        records.append(ProofRecord(
            name=nm,
            conclusion_text=term_text(export.theorem.concl),
            package_name=meta.name,
            classical=c.classical,
            axioms_used=c.axioms_used,
            constructive_lemmas=c.constructive_lemmas,
            classical_lemmas=c.classical_lemmas,
            size=proof_size(result.trace, export.theorem.trace),
            trace_id=export.theorem.trace))
    recs = tuple(records)
    return PackageAnalysis(meta, recs, package_stats(recs, meta))


def export_table(result: ArticleResult,
                 analysis: PackageAnalysis) -> dict:
    """Sequent-keyed lemma info for packages that import these exports."""
    table = {}
    for export, record in zip(result.exports, analysis.records):
        key = sequent_key(export.theorem.hyps, export.theorem.concl)
        table.setdefault(key, LemmaInfo(
            name=record.name,
            package=record.package_name,
            classical=record.classical,
            axioms_used=record.axioms_used))
    return table


def analyze_corpus(results: Mapping[str, ArticleResult],
                   metas: Sequence[PackageMeta],
                   choice_pattern: Optional[HolTerm] = None,
                   strict: bool = False):
    """Analyze packages in dependency order; lemma tables flow along the
    requirement edges (transitively), so classicality propagates."""
    graph = dependency_graph(metas)
    by_name = {m.name: m for m in metas}
    tables: dict[str, dict] = {}
    analyses: dict[str, PackageAnalysis] = {}
    for pkg in graph.load_order:
        meta = by_name.get(pkg)
        if meta is None or pkg not in results:
            continue  # declared requirement without a bundled article
        table: dict = {}
        for dep in _transitive_requires(meta, by_name):
            table.update(tables.get(dep, {}))
        analysis = analyze_package(results[pkg], meta, table,
                                   choice_pattern, strict)
        analyses[pkg] = analysis
        tables[pkg] = export_table(results[pkg], analysis)
    return analyses, graph


def _transitive_requires(meta: PackageMeta,
                         by_name: Mapping[str, PackageMeta]) -> list:
    seen: list = []
    stack = list(meta.requires)
    while stack:
        dep = stack.pop()
        if dep in seen:
            continue
        seen.append(dep)
        if dep in by_name:
            stack.extend(by_name[dep].requires)
    return sorted(seen)


def load_corpus(directory: Union[str, Path]):
    """Read packages-meta.json plus one article per package from a
    directory; returns (results by package, metas in file order)."""
    directory = Path(directory)
    with open(directory / "packages-meta.json", "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    metas = [PackageMeta.from_json(o) for o in doc["packages"]]
    results = {}
    for meta in metas:
        path = directory / f"{meta.name}.art"
        if path.exists():
            results[meta.name] = replay(read_article_text(path))
    return results, metas
