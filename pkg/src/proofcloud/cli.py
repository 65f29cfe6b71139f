"""Command-line driver wiring the whole pipeline.

Subcommands: check, translate, verify, analyze, index, serve, bench,
pipeline.  Exit codes are stable: 0 success, 1 domain failure, 2 usage
error.  Failures are reported as one JSON object per line on stderr so
other tools can consume them.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .analyzer import (PackageMeta, analysis_from_json, analyze_corpus,
                       graph_from_json, load_choice_pattern, term_text,
                       verification_from_json)
from .article import read_article_text, replay
from .bench import emit_table, measure, reduction_summary
from .dedukti import emit_module, prelude_module, translate_package
from .lpcheck import parse_module, typecheck
from .server import BindError, build_snapshot, make_server
from .site import corpus_stats, export_site, load_site, page_slug

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _diag(stage: str, message: str, file: Optional[str] = None,
          line: Optional[int] = None) -> None:
    record = {"stage": stage, "file": file, "line": line, "message": message}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _data_root() -> Optional[Path]:
    root = os.environ.get("PROOFCLOUD_DATA")
    return Path(root) if root else None


def _resolve(path_str: str) -> Path:
    """Literal path if it exists, else relative to PROOFCLOUD_DATA."""
    p = Path(path_str)
    if not p.exists():
        root = _data_root()
        if root is not None and (root / path_str).exists():
            return root / path_str
    return p


def _version_mode(text: str) -> Optional[int]:
    return None if text == "auto" else int(text)


def _sequent(thm) -> str:
    hyps = ", ".join(term_text(h) for h in thm.hyps)
    return (hyps + " " if hyps else "") + "|- " + term_text(thm.concl)


def _map_jobs(fn, items, jobs: int):
    """Apply fn preserving input order; per-item failures become results."""
    def guarded(item):
        try:
            return fn(item), None
        except Exception as e:  # noqa: BLE001 - reported via diagnostics
            return None, e
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(guarded, items))
    return [guarded(item) for item in items]


# ---------------------------------------------------------------------------
# Subcommands

def cmd_check(args) -> int:
    mode = _version_mode(args.version_mode)
    paths = [_resolve(p) for p in args.articles]
    outcomes = _map_jobs(
        lambda p: replay(read_article_text(p), version_mode=mode,
                         strict=not args.lenient),
        paths, args.jobs)
    failed = False
    for path, (result, err) in zip(paths, outcomes):
        if err is not None:
            failed = True
            _diag("check", str(err), file=str(path),
                  line=getattr(err, "line", None))
            continue
        print(f"{path}: version {result.version}, "
              f"{len(result.exports)} exports, "
              f"{len(result.assumptions)} assumptions")
        for export in result.exports:
            print(f"  thm {export.hint}: {_sequent(export.theorem)}")
        for assumption in result.assumptions:
            print(f"  assume: {_sequent(assumption)}")
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_translate(args) -> int:
    mode = _version_mode(args.version_mode)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    prelude_path = out / "prelude.dk"
    prelude_path.write_text(emit_module(prelude_module()), encoding="utf-8")
    print(f"wrote {prelude_path}")
    paths = [_resolve(p) for p in args.articles]

    def one(path: Path) -> Path:
        result = replay(read_article_text(path), version_mode=mode)
        module = translate_package(result, path.stem)
        target = out / f"{module.name}.dk"
        target.write_text(emit_module(module), encoding="utf-8")
        return target

    failed = False
    for path, (target, err) in zip(paths, _map_jobs(one, paths, args.jobs)):
        if err is not None:
            failed = True
            _diag("translate", str(err), file=str(path),
                  line=getattr(err, "line", None))
        else:
            print(f"wrote {target}")
    return EXIT_FAILURE if failed else EXIT_OK


def _verify_dir(directory: Path) -> int:
    paths = sorted(directory.glob("*.dk"))
    if not paths:
        _diag("verify", "no .dk modules found", file=str(directory))
        return EXIT_FAILURE
    modules = []
    for path in paths:
        try:
            modules.append((path, parse_module(path.read_text("utf-8"))))
        except Exception as e:  # noqa: BLE001
            _diag("verify", str(e), file=str(path),
                  line=getattr(e, "line", None))
            return EXIT_FAILURE
    by_name = {m.name: m for _, m in modules}
    prelude = by_name.get("prelude") or prelude_module()
    failed = False
    ordered = sorted(modules, key=lambda pm: pm[1].name != "prelude")
    for path, module in ordered:
        deps = [] if module.name == "prelude" else [prelude]
        report = typecheck(module, deps=deps)
        for entry in report.entries:
            if not entry["ok"]:
                failed = True
                _diag("verify",
                      f"declaration {entry['name']}: {entry['message']}",
                      file=str(path))
        if report.ok:
            print(f"ok {path} ({len(report.entries)} declarations, "
                  f"{report.seconds:.2f}s)")
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_verify(args) -> int:
    return _verify_dir(_resolve(args.directory))


def _load_metas(meta_path: Path) -> list:
    with open(meta_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return [PackageMeta.from_json(o) for o in doc["packages"]]


def _run_analysis(args, paths):
    metas = _load_metas(_resolve(args.meta)) if args.meta else []
    named = {m.name for m in metas}
    results = {}
    for path in paths:
        results[path.stem] = replay(read_article_text(path),
                                    version_mode=_version_mode(
                                        args.version_mode))
        if path.stem not in named:
            metas.append(PackageMeta(name=path.stem))
    choice = (load_choice_pattern(_resolve(args.choice_pattern))
              if args.choice_pattern else None)
    return analyze_corpus(results, metas, choice, strict=args.strict)


def _write_analysis(analyses, graph, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)

    def dump(path: Path, doc) -> None:
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")

    for pkg, analysis in sorted(analyses.items()):
        dump(out / f"{page_slug(pkg)}.analysis.json", analysis.to_json())
    dump(out / "graph.json", graph.to_json())
    dump(out / "corpus-stats.json", corpus_stats(analyses))


def _print_stats(analyses) -> None:
    for pkg in sorted(analyses):
        s = analyses[pkg].stats
        print(f"{pkg}: {s.total_proofs} proofs, "
              f"{s.constructive_count} constructive, "
              f"{s.classical_count} classical "
              f"({float(s.constructive_percentage):g}% constructive)")
    totals = corpus_stats(analyses)
    print(f"corpus: {totals['packages']} packages, "
          f"{totals['total-proofs']} proofs, "
          f"{totals['constructive-percentage']:g}% constructive")


def cmd_analyze(args) -> int:
    paths = [_resolve(p) for p in args.articles]
    try:
        analyses, graph = _run_analysis(args, paths)
    except Exception as e:  # noqa: BLE001
        _diag("analyze", str(e), line=getattr(e, "line", None))
        return EXIT_FAILURE
    if args.output:
        _write_analysis(analyses, graph, Path(args.output))
    _print_stats(analyses)
    return EXIT_OK


def cmd_index(args) -> int:
    src = _resolve(args.json_dir)
    try:
        files = sorted(src.glob("*.analysis.json"))
        if not files:
            _diag("index", "no .analysis.json files found", file=str(src))
            return EXIT_FAILURE
        analyses = {}
        for path in files:
            analysis = analysis_from_json(
                json.loads(path.read_text(encoding="utf-8")))
            analyses[analysis.meta.name] = analysis
        with open(src / "graph.json", "r", encoding="utf-8") as fh:
            graph = graph_from_json(json.load(fh))
        verifications = None
        ver_path = src / "verifications.json"
        if ver_path.exists():
            doc = json.loads(ver_path.read_text(encoding="utf-8"))
            verifications = {pkg: verification_from_json(v)
                             for pkg, v in doc.items()}
        manifest = export_site(analyses, graph, args.output, verifications)
    except Exception as e:  # noqa: BLE001
        _diag("index", str(e), file=str(src))
        return EXIT_FAILURE
    print(f"wrote {len(manifest['files']) + 1} files to {args.output}")
    return EXIT_OK


def _parse_bind(text: str) -> tuple:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"--bind expects HOST:PORT, got {text!r}")
    return host, int(port)


def cmd_serve(args) -> int:
    site = _resolve(args.site)
    try:
        host, port = _parse_bind(args.bind)
        analyses, graph, verifications = load_site(site)
        snapshot = build_snapshot(analyses, graph, verifications,
                                  site_dir=site,
                                  ui_dir=_resolve(args.ui) if args.ui
                                  else None)
        server = make_server(snapshot, host, port)
    except (ValueError, OSError, KeyError, BindError) as e:
        _diag("serve", str(e), file=str(site))
        return EXIT_FAILURE
    bound_port = server.server_address[1]
    print(f"serving {site} at http://{host}:{bound_port}/", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_bench(args) -> int:
    paths = [_resolve(p) for p in args.articles]
    rows, env = measure(paths, repetitions=args.reps)
    if args.format == "json":
        doc = json.loads(emit_table(rows, "json", args.table))
        doc["environment"] = env
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        sys.stdout.write(emit_table(rows, args.format, args.table))
        if args.format == "text":
            print()
            print(reduction_summary(rows))
            print("environment: " + json.dumps(env, sort_keys=True))
    failed = False
    for row in rows:
        if row.error is not None:
            failed = True
            _diag("bench", row.error, file=row.package)
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_pipeline(args) -> int:
    out = Path(args.output)
    paths = [_resolve(p) for p in args.articles]

    # stage 1: every article must replay
    rc = cmd_check(argparse.Namespace(
        articles=args.articles, version_mode=args.version_mode,
        lenient=False, jobs=args.jobs))
    if rc != EXIT_OK:
        return rc
    print("pipeline: check ok")

    rc = cmd_translate(argparse.Namespace(
        articles=args.articles, output=str(out / "dk"),
        version_mode=args.version_mode, jobs=args.jobs))
    if rc != EXIT_OK:
        return rc
    print("pipeline: translate ok")

    if _verify_dir(out / "dk") != EXIT_OK:
        return EXIT_FAILURE
    print("pipeline: verify ok")

    try:
        analyses, graph = _run_analysis(args, paths)
        _write_analysis(analyses, graph, out / "analysis")
    except Exception as e:  # noqa: BLE001
        _diag("analyze", str(e), line=getattr(e, "line", None))
        return EXIT_FAILURE
    print("pipeline: analyze ok")

    site = out / "site"
    export_site(analyses, graph, site)

    # recount: the exported stats must equal the in-memory aggregation
    published = json.loads((site / "stats.json").read_text(encoding="utf-8"))
    if published != corpus_stats(analyses):
        _diag("index", "exported stats disagree with analysis totals",
              file=str(site / "stats.json"))
        return EXIT_FAILURE
    print("pipeline: index ok")
    _print_stats(analyses)
    print(f"pipeline: site at {site}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing

def _add_version_mode(p) -> None:
    p.add_argument("--version-mode", choices=["5", "6", "auto"],
                   default="auto", help="force the kernel version")


def _add_jobs(p) -> None:
    p.add_argument("--jobs", type=int, default=1,
                   help="maximum parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proofcloud",
        description="Check, translate, verify, analyze, index, serve and "
                    "benchmark proof article packages.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="replay articles and print exports")
    p.add_argument("articles", nargs="+")
    p.add_argument("--lenient", action="store_true",
                   help="tolerate a non-empty final stack")
    _add_version_mode(p)
    _add_jobs(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("translate", help="emit one .dk module per article")
    p.add_argument("articles", nargs="+")
    p.add_argument("-o", "--output", required=True)
    _add_version_mode(p)
    _add_jobs(p)
    p.set_defaults(fn=cmd_translate)

    p = sub.add_parser("verify", help="typecheck every .dk module in a "
                                      "directory")
    p.add_argument("directory")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("analyze", help="classify proofs and emit JSON "
                                       "records, stats and the graph")
    p.add_argument("articles", nargs="+")
    p.add_argument("--meta", help="package metadata JSON file")
    p.add_argument("-o", "--output", help="directory for analysis JSON")
    p.add_argument("--strict", action="store_true",
                   help="fail on unresolvable lemma boundaries")
    p.add_argument("--choice-pattern",
                   help="JSON term overriding the choice axiom pattern")
    _add_version_mode(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("index", help="build the static site from analysis "
                                     "JSON")
    p.add_argument("json_dir")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=cmd_index)

    p = sub.add_parser("serve", help="serve a site directory over HTTP")
    p.add_argument("site")
    p.add_argument("--bind", default="127.0.0.1:8000",
                   help="HOST:PORT to listen on (port 0 picks a free port)")
    p.add_argument("--ui", help="directory served under /ui/")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("bench", help="measure sizes and times per article")
    p.add_argument("articles", nargs="+")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--format", choices=["text", "csv", "json"],
                   default="text")
    p.add_argument("--table", choices=["articles", "dedukti"],
                   default="articles")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("pipeline", help="run check, translate, verify, "
                                        "analyze and index in order")
    p.add_argument("articles", nargs="+")
    p.add_argument("--meta", help="package metadata JSON file")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--choice-pattern")
    _add_version_mode(p)
    _add_jobs(p)
    p.set_defaults(fn=cmd_pipeline)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
