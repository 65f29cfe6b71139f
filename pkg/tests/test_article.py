"""Article reader, stack machine and serializer behavior."""

import gzip
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from proofcloud.article import (
    ARITY, BadQuote, ExportMismatch, Machine, Name, NonEmptyFinalStack, OList,
    ONum, UnknownCommand, VersionError, emit_article, parse_line, parse_name,
    quote_name, read_article_text, replay,
)
from proofcloud.kernel import alpha_equal
from support import db_term, hyp_keys

FIXTURES = Path(__file__).parent / "fixtures" / "articles"
ALL_ARTICLES = sorted(FIXTURES.glob("*.art"))

REFL_ART = '"x"\n"bool"\ntypeOp\nnil\nopType\nvar\nvarTerm\nrefl\npop\n'


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


def command_lines(text: str) -> int:
    return sum(1 for raw in text.splitlines()
               if raw.strip() and not raw.strip().startswith("#"))


def sequents(result):
    return [(hyp_keys(e.theorem), db_term(e.theorem.concl))
            for e in result.exports]


# -- parseLine ----------------------------------------------------------------

def test_parse_opcode():
    assert parse_line("refl") == ("op", "refl")
    assert parse_line("  deductAntisym  ") == ("op", "deductAntisym")


def test_parse_quoted_name():
    kind, n = parse_line('"Data.Bool.T"')
    assert kind == "name"
    assert n == Name(("Data", "Bool"), "T")
    # oracle: the canonical quoted form re-parses to the same value
    assert quote_name(n) == '"Data.Bool.T"'
    assert parse_line(quote_name(n)) == ("name", n)


def test_parse_comment_and_blank():
    assert parse_line("# comment") is None
    assert parse_line("   ") is None
    assert parse_line("") is None


def test_parse_numbers():
    assert parse_line("0") == ("num", 0)
    assert parse_line("-12") == ("num", -12)
    assert parse_line("+3") == ("num", 3)


def test_parse_escape_sequences():
    kind, n = parse_line(r'"a\.b.c"')
    assert n == Name(("a.b",), "c")
    kind, n = parse_line(r'"x\\y"')
    assert n == Name((), "x\\y")


def test_parse_bad_quotes():
    with pytest.raises(BadQuote):
        parse_line('"open')
    with pytest.raises(BadQuote):
        parse_line('"trailing\\"')


def test_parse_unknown_command():
    with pytest.raises(UnknownCommand):
        parse_line("bogus")


@given(st.lists(st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), max_size=6),
    min_size=1, max_size=4))
def test_name_quoting_round_trips(parts):
    n = Name(tuple(parts[:-1]), parts[-1])
    quoted = quote_name(n)
    assert parse_name(quoted[1:-1]) == n


# -- step ---------------------------------------------------------------------

def test_def_and_ref_share_an_object():
    m = Machine()
    for raw in ["0", "0", "def", "0", "ref"]:
        m.execute(parse_line(raw))
    assert len(m.stack) == 2
    assert len(m.dictionary) == 1
    assert m.stack[-1] == ONum(0)


def test_hd_tl_splits_a_list():
    m = Machine(version_mode=6)
    for raw in ["1", "2", "3", "nil", "cons", "cons", "cons", "hdTl"]:
        m.execute(parse_line(raw))
    # head below, tail on top
    assert m.stack == [ONum(1), OList((ONum(2), ONum(3)))]


def test_v6_opcode_without_declaration():
    art = REFL_ART.replace("refl\npop\n", "refl\nsym\npop\n")
    with pytest.raises(VersionError) as exc:
        replay(art)
    assert exc.value.line == 9


def test_stack_depth_follows_arity():
    for path in ALL_ARTICLES:
        m = Machine()
        for lineno, raw in enumerate(path.read_text().splitlines(), 1):
            cmd = parse_line(raw, lineno)
            if cmd is None:
                continue
            key = cmd[1] if cmd[0] == "op" else cmd[0]
            pops, pushes = ARITY[key]
            before = len(m.stack)
            m.execute(cmd)
            assert len(m.stack) == before - pops + pushes, (path.name, lineno)


# -- replay -------------------------------------------------------------------

def test_replay_refl_article():
    r = replay(fixture_text("refl.art"))
    assert len(r.exports) == 1
    assert r.assumptions == []
    d = r.exports[0].theorem
    assert d.hyps == ()
    lhs, rhs = d.concl.fun.arg, d.concl.arg
    assert lhs == rhs


def test_replay_empty_article():
    r = replay("")
    assert r.exports == [] and r.assumptions == []
    assert len(r.trace.nodes) == 0
    assert r.command_counts == {}


def test_replay_axiom_article():
    text = fixture_text("axiom2.art")
    r = replay(text)
    assert len(r.assumptions) == 1
    assert len(r.exports) == 2
    assert sum(r.command_counts.values()) == command_lines(text)


def test_replay_attaches_line_numbers():
    with pytest.raises(UnknownCommand) as exc:
        replay("# leading comment\nbogus\n")
    assert exc.value.line == 2


def test_replay_strict_rejects_leftover_stack():
    with pytest.raises(NonEmptyFinalStack):
        replay("0\n")


def test_replay_lenient_warns_instead():
    r = replay("0\n", strict=False)
    assert r.warnings and "stack" in r.warnings[0]


def test_version_declaration_errors():
    with pytest.raises(VersionError):
        replay("5\nversion\n")
    with pytest.raises(VersionError):
        replay("6\nversion\n6\nversion\n")
    with pytest.raises(VersionError):
        replay('"x"\npop\n6\nversion\n')


def test_command_count_totals():
    for path in ALL_ARTICLES:
        text = path.read_text()
        r = replay(text)
        assert sum(r.command_counts.values()) == command_lines(text), path.name


def test_replay_is_deterministic():
    for path in ALL_ARTICLES:
        text = path.read_text()
        a, b = replay(text), replay(text)
        assert sequents(a) == sequents(b)
        assert a.command_counts == b.command_counts
        assert [ (n.rule, n.premises) for n in a.trace.nodes ] == \
            [ (n.rule, n.premises) for n in b.trace.nodes ]
        assert emit_article(a) == emit_article(b)


def test_reads_gzipped_articles(tmp_path):
    plain = FIXTURES / "refl.art"
    gz = tmp_path / "refl.art.gz"
    gz.write_bytes(gzip.compress(plain.read_bytes()))
    assert read_article_text(gz) == plain.read_text()
    assert read_article_text(plain) == plain.read_text()
    assert sequents(replay(read_article_text(gz))) == \
        sequents(replay(plain.read_text()))


def test_export_conclusion_must_match():
    art = (
        '"x"\n"bool"\ntypeOp\nnil\nopType\nvar\n0\ndef\nvarTerm\n1\ndef\n'
        'refl\n2\ndef\npop\nnil\n1\nref\n2\nref\nthm\n'
    )
    with pytest.raises(ExportMismatch):
        replay(art)


# -- emitArticle --------------------------------------------------------------

@pytest.mark.parametrize("path", ALL_ARTICLES, ids=lambda p: p.stem)
@pytest.mark.parametrize("target", [5, 6])
def test_round_trip_preserves_exports(path, target):
    first = replay(path.read_text())
    out = emit_article(first, version=target)
    second = replay(out)
    assert second.version == target or not out
    assert len(second.exports) == len(first.exports)
    for a, b in zip(first.exports, second.exports):
        assert alpha_equal(a.theorem.concl, b.theorem.concl)
        assert hyp_keys(a.theorem) == hyp_keys(b.theorem)
    assert len(second.assumptions) == len(first.assumptions)
    # serializing the reparse reproduces the bytes exactly
    assert emit_article(second, version=target) == out


def test_v5_emission_avoids_v6_opcodes():
    for name, opcode in [("v6-sym.art", "sym"), ("v6-trans.art", "trans"),
                         ("v6-provehyp.art", "proveHyp")]:
        out = emit_article(replay(fixture_text(name)), version=5)
        lines = out.splitlines()
        assert opcode not in lines, name
        assert "version" not in lines
        # and the v6 emission keeps the compact rule
        out6 = emit_article(replay(fixture_text(name)), version=6)
        assert opcode in out6.splitlines()


def _uses_v6_rule(result) -> bool:
    for n in result.trace.nodes:
        if n.rule in ("sym", "trans", "proveHyp"):
            return True
        if n.rule == "defineTypeOp" and n.payload.get("version") == 6:
            return True
    return False


def test_v6_form_never_larger_when_v6_rules_present():
    checked = 0
    for path in ALL_ARTICLES:
        r = replay(path.read_text())
        if not _uses_v6_rule(r):
            continue
        five = gzip.compress(emit_article(r, version=5).encode())
        six = gzip.compress(emit_article(r, version=6).encode())
        assert len(six) <= len(five), path.name
        checked += 1
    assert checked >= 5


def test_fixture_corpus_covers_every_opcode():
    from proofcloud.article import OPCODES

    seen = set()
    for path in ALL_ARTICLES:
        for raw in path.read_text().splitlines():
            cmd = parse_line(raw)
            if cmd and cmd[0] == "op":
                seen.add(cmd[1])
    assert seen == set(OPCODES)
    assert len(ALL_ARTICLES) >= 15
