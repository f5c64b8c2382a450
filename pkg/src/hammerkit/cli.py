"""hammerkit command line.

Subcommands cover the batch pipeline end to end: ingest a corpus, export
feature characterizations, train a ranker, emit rankings, generate TPTP
problems, run provers over them, and compute the portfolio metrics.  The
``serve`` subcommand runs the static online advisor and ``fixture-prove``
exposes the deterministic test prover as an ordinary SZS subprocess.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluation, service
from .features import write_feature_file
from .learners import (
    DepPolicy, build_examples, usage_likelihoods, write_ranking_file,
)
from .provers import ExternalProver, FixtureProver, read_prover_config
from .translate import translate_problem


def _add_corpus_arg(p):
    p.add_argument("--corpus", required=True, help="corpus cache (from ingest)")


def _load_provers(args, workdir: Path) -> list:
    provers = []
    if getattr(args, "provers", None):
        for spec in read_prover_config(args.provers):
            provers.append(ExternalProver(spec, workdir / spec.id,
                                          timelimit=args.timelimit))
    if getattr(args, "fixture", False) or not provers:
        provers.append(FixtureProver())
    return provers


def cmd_ingest(args):
    corpus = corpus_mod.ingest(args.statements, args.deps, args.trivial,
                               args.signature)
    corpus.save(args.out)
    print("ingested %d entries (%d aliases, %d with dependencies)" % (
        len(corpus.entries), len(corpus.aliases), len(corpus.deps)))


def cmd_features(args):
    corpus = corpus_mod.Corpus.load(args.corpus)
    write_feature_file(corpus, args.out, args.mode, args.triv)
    print("wrote %s" % args.out)


def cmd_train(args):
    corpus = corpus_mod.Corpus.load(args.corpus)
    config = evaluation.LearnerConfig(
        learner=args.learner, mode=args.mode, include_trivial=args.triv,
        policy=_policy_from(args, corpus), k=args.k)
    ranker = evaluation.Ranker(config)
    for ex in build_examples(corpus, _proofs_from(args), config.policy,
                             config.mode, config.include_trivial):
        ranker.train(ex)
    ranker.model.save(args.out)
    print("trained %s on %d examples -> %s" % (args.learner,
                                               ranker.trained, args.out))


def _proofs_from(args) -> dict:
    if not getattr(args, "atp_proofs", None):
        return {}
    matrix = evaluation.EvalMatrix.read_csv(args.atp_proofs)
    return evaluation.proofs_from_matrix(matrix)


def _policy_from(args, corpus) -> DepPolicy:
    likelihoods = {}
    proofs = _proofs_from(args)
    if proofs and args.policy in ("minweight", "nominweight"):
        likelihoods = usage_likelihoods(corpus, proofs, args.prefer)
    return DepPolicy(kind=args.policy, floor=args.floor, prefer=args.prefer,
                     likelihoods=likelihoods)


def cmd_predict(args):
    corpus = corpus_mod.Corpus.load(args.corpus)
    config = evaluation.LearnerConfig(learner=args.learner, mode=args.mode,
                                      include_trivial=args.triv, k=args.k)
    ranker = service.load_ranker(args.model, args.learner, config)
    from .features import extract_features
    rankings = {}
    for entry in corpus.entries:
        fs = extract_features(entry.statement, args.mode, args.triv)
        candidates = corpus.names_before(entry.index)
        rankings[entry.name] = ranker.rank(fs.features, candidates)[:args.slice]
    write_ranking_file(args.out, rankings)
    print("wrote %d rankings to %s" % (len(rankings), args.out))


def cmd_problems(args):
    corpus = corpus_mod.Corpus.load(args.corpus)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    from .learners import read_ranking_file
    rankings = read_ranking_file(args.ranking) if args.ranking else None
    count = 0
    for entry in corpus.entries:
        if entry.kind != corpus_mod.KIND_PROVED:
            continue
        if rankings is None:
            goal, premises = corpus_mod.build_reproving_input(corpus, entry.name)
            slice_tag = "deps"
        else:
            if entry.name not in rankings:
                continue
            goal, premises = corpus_mod.build_advised_input(
                corpus, entry.name, rankings[entry.name], args.slice)
            slice_tag = str(args.slice)
        problem = translate_problem(args.format, goal, premises, entry.name)
        path = outdir / ("%05d_%s.%s.p" % (entry.index, slice_tag, args.format))
        path.write_text(problem.serialize(), encoding="utf-8")
        count += 1
    print("wrote %d problems to %s" % (count, outdir))


def cmd_reprove(args):
    corpus = corpus_mod.Corpus.load(args.corpus)
    provers = _load_provers(args, Path(args.workdir))
    matrix = evaluation.run_reproving(corpus, provers, args.timelimit,
                                      every=args.every, fmt=args.format,
                                      max_workers=args.workers)
    matrix.write_csv(args.out)
    report = evaluation.compute_metrics(matrix)
    print(evaluation.render_metrics_table(report))
    print("\nresults -> %s" % args.out)


def cmd_eval(args):
    corpus = corpus_mod.Corpus.load(args.corpus)
    provers = _load_provers(args, Path(args.workdir))
    config = evaluation.LearnerConfig(
        learner=args.learner, mode=args.mode, include_trivial=args.triv,
        policy=_policy_from(args, corpus), k=args.k)
    matrix = evaluation.run_chronological_eval(
        corpus, provers, config, slices=tuple(args.slices),
        timelimit=args.timelimit, atp_proofs=_proofs_from(args),
        every=args.every, fmt=args.format, max_workers=args.workers)
    matrix.write_csv(args.out)
    report = evaluation.compute_metrics(matrix)
    print(evaluation.render_metrics_table(report))
    print()
    print(evaluation.render_greedy_table(report.greedy, report.problem_count))
    print("\nresults -> %s" % args.out)


def cmd_metrics(args):
    matrix = evaluation.EvalMatrix.read_csv(args.results)
    report = evaluation.compute_metrics(matrix, args.countersat_as_solved)
    print(evaluation.render_metrics_table(report))


def cmd_greedy(args):
    matrix = evaluation.EvalMatrix.read_csv(args.results)
    seq = evaluation.greedy_cover(matrix,
                                  countersat_as_solved=args.countersat_as_solved)
    print(evaluation.render_greedy_table(seq, len(matrix.problems)))


def cmd_compare_deps(args):
    def read_counts(path):
        out = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                name, rest = line.split(":", 1)
                out[name.strip()] = len(rest.split())
        return out
    cmp = evaluation.compare_dep_counts(read_counts(args.original),
                                        read_counts(args.advised))
    print(evaluation.render_dep_comparison(cmp))


def cmd_serve(args):
    corpus = corpus_mod.Corpus.load(args.corpus)
    config = evaluation.LearnerConfig(learner=args.learner, mode=args.mode,
                                      include_trivial=args.triv, k=args.k)
    ranker = service.load_ranker(args.model, args.learner, config)
    provers = _load_provers(args, Path(args.workdir))
    cfg = service.ServiceConfig(
        port=args.port, host=args.host, corpus=corpus, ranker=ranker,
        provers=provers, slices=tuple(args.slices), budget=args.timelimit)
    print("advising on %s:%d" % (args.host, args.port))
    service.serve(cfg)


def cmd_fixture_prove(args):
    fixture = FixtureProver(depth=args.depth)
    sys.stdout.write(fixture.prove_file(args.file))


def _int_list(text: str) -> list:
    return [int(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hammerkit", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a corpus cache from export files")
    p.add_argument("--statements", required=True)
    p.add_argument("--deps")
    p.add_argument("--trivial")
    p.add_argument("--signature")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("features", help="export feature characterizations")
    _add_corpus_arg(p)
    p.add_argument("--mode", default="symst",
                   choices=("syms0", "syms", "symst", "symsd"))
    p.add_argument("--triv", action="store_true",
                   help="include logical (trivial) symbols")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    def learner_args(p, with_policy=True):
        p.add_argument("--learner", default="nb", choices=("nb", "knn"))
        p.add_argument("--mode", default="symst",
                       choices=("syms0", "syms", "symst", "symsd"))
        p.add_argument("--triv", action="store_true")
        p.add_argument("--k", type=int, default=40)
        if with_policy:
            p.add_argument("--policy", default="minweight",
                           choices=("minweight", "nominweight", "symsonly",
                                    "atponly"))
            p.add_argument("--prefer", default="minimal",
                           choices=("minimal", "v_pref", "e_pref", "z_pref"))
            p.add_argument("--floor", type=float, default=0.001)
            p.add_argument("--atp-proofs", dest="atp_proofs",
                           help="results CSV providing ATP proofs")

    p = sub.add_parser("train", help="train a premise ranker")
    _add_corpus_arg(p)
    learner_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="emit premise rankings for the corpus")
    _add_corpus_arg(p)
    learner_args(p, with_policy=False)
    p.add_argument("--model", required=True)
    p.add_argument("--slice", type=int, default=512)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("problems", help="write TPTP problem files")
    _add_corpus_arg(p)
    p.add_argument("--format", default="fof", choices=("fof", "tff1", "thf"))
    p.add_argument("--slice", type=int, default=32)
    p.add_argument("--ranking", help="ranking file; omit for re-proving problems")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_problems)

    def prover_args(p):
        p.add_argument("--provers", help="prover config file (id | format | command)")
        p.add_argument("--fixture", action="store_true",
                       help="use the built-in fixture prover")
        p.add_argument("--timelimit", type=float, default=30.0)
        p.add_argument("--workers", type=int, default=14)
        p.add_argument("--workdir", default="hammerkit-work")
        p.add_argument("--every", type=int, default=1,
                       help="evaluate every N-th theorem (10 = paper subset)")
        p.add_argument("--format", default="fof", choices=("fof", "tff1", "thf"))

    p = sub.add_parser("reprove", help="run provers on re-proving problems")
    _add_corpus_arg(p)
    prover_args(p)
    p.add_argument("--out", required=True, help="results CSV")
    p.set_defaults(func=cmd_reprove)

    p = sub.add_parser("eval", help="chronological predict-then-train evaluation")
    _add_corpus_arg(p)
    prover_args(p)
    learner_args(p)
    p.add_argument("--slices", type=_int_list, default=[8, 32, 128, 512])
    p.add_argument("--out", required=True, help="results CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("metrics", help="portfolio metrics from a results CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--countersat-as-solved", action="store_true")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("greedy", help="greedy covering sequence")
    p.add_argument("--results", required=True)
    p.add_argument("--countersat-as-solved", action="store_true")
    p.set_defaults(func=cmd_greedy)

    p = sub.add_parser("compare-deps", help="original vs advised proof sizes")
    p.add_argument("--original", required=True)
    p.add_argument("--advised", required=True)
    p.set_defaults(func=cmd_compare_deps)

    p = sub.add_parser("serve", help="static online advisor over TCP")
    _add_corpus_arg(p)
    learner_args(p, with_policy=False)
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--slices", type=_int_list, default=[8, 32, 128, 512])
    prover_args(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("fixture-prove", help="run the fixture prover on a file")
    p.add_argument("file")
    p.add_argument("--depth", type=int, default=8)
    p.set_defaults(func=cmd_fixture_prove)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as e:  # surface clean errors for shell use
        if isinstance(e, (BrokenPipeError, KeyboardInterrupt)):
            return 130
        print("error: %s" % e, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
