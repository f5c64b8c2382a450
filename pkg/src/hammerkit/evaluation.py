"""Chronological evaluation, the learn-prove improvement loop, and
portfolio metrics.

The chronological evaluation replays library development in order with a
strict predict-then-train discipline: advice for theorem i comes from a
model that has seen exactly the i earlier entries, and only after problems
are generated and attempted does the model learn the theorem's own example.

Metrics follow the CASC conventions: a method's SOTAC is the mean over its
solved problems of 1/(number of methods solving that problem), Sigma-SOTAC
the corresponding sum, Unique the problems only it solved.  CounterSat
results are counted separately and excluded from theorem-hood aggregation
unless explicitly requested.  Joint performance is reported as a greedy
covering sequence (exact maximum cover is NP-hard and deliberately not
attempted).
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .corpus import Corpus, KIND_PROVED, build_advised_input, build_reproving_input
from .learners import (
    DepPolicy, KnnStore, NbModel, TrainingExample, build_examples,
    knn_rank, nb_update, nb_rank,
)
from .features import extract_features
from .provers import COUNTERSAT, DEFAULT_WORKERS, ProverRun, pseudo_minimize
from .translate import translate_problem

DEFAULT_SLICES = (8, 32, 128, 512)

#: slice list for the fine-grained slice-analysis mode
EXTENDED_SLICES = (4, 12, 16, 24, 32, 40, 52, 64, 92, 128, 154, 184, 218,
                   256, 300, 430, 512, 740, 1024, 2048)


class EvalError(Exception):
    pass


@dataclass
class EvalMatrix:
    problems: list = field(default_factory=list)
    methods: list = field(default_factory=list)
    cells: dict = field(default_factory=dict)  # (problem, method) -> ProverRun

    def record(self, problem: str, method: str, run: ProverRun):
        if problem not in self.problems:
            self.problems.append(problem)
        if method not in self.methods:
            self.methods.append(method)
        self.cells[(problem, method)] = run

    def run_for(self, problem: str, method: str) -> ProverRun | None:
        return self.cells.get((problem, method))

    def solved_by(self, method: str) -> set:
        return {p for p in self.problems
                if (r := self.cells.get((p, method))) is not None and r.proved}

    def countersat_by(self, method: str) -> set:
        return {p for p in self.problems
                if (r := self.cells.get((p, method))) is not None
                and r.status == COUNTERSAT}

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["problem", "prover", "slice", "status", "seconds",
                        "used_premises"])
            for (problem, method), run in sorted(self.cells.items()):
                prover, _, slc = method.partition("+")
                w.writerow([problem, prover, slc, run.status,
                            "%.3f" % run.seconds, ";".join(run.used_premises)])

    @staticmethod
    def read_csv(path) -> "EvalMatrix":
        m = EvalMatrix()
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                method = row["prover"] + ("+" + row["slice"] if row["slice"] else "")
                used = tuple(u for u in row["used_premises"].split(";") if u)
                m.record(row["problem"], method,
                         ProverRun(row["prover"], row["problem"], row["status"],
                                   float(row["seconds"]), used))
        return m


# ---------------------------------------------------------------------------
# Learner wrapper shared by evaluation and service


@dataclass
class LearnerConfig:
    learner: str = "nb"          # nb | knn
    mode: str = "symst"
    include_trivial: bool = False
    policy: DepPolicy = field(default_factory=DepPolicy)
    k: int = 40                  # knn only


class Ranker:
    """An incremental model with a uniform train/rank interface."""

    def __init__(self, config: LearnerConfig):
        self.config = config
        if config.learner == "nb":
            self.model = NbModel()
        elif config.learner == "knn":
            self.model = KnnStore()
        else:
            raise EvalError(f"unknown learner {config.learner!r}")

    @property
    def trained(self) -> int:
        return self.model.total

    def train(self, example: TrainingExample):
        if isinstance(self.model, NbModel):
            nb_update(self.model, example)
        else:
            self.model.add(example)

    def rank(self, query, candidates: list) -> list:
        if isinstance(self.model, NbModel):
            return nb_rank(self.model, query, candidates)
        return knn_rank(self.model, query, self.config.k, candidates)


# ---------------------------------------------------------------------------
# Chronological evaluation


def run_chronological_eval(corpus: Corpus, provers: list,
                           config: LearnerConfig | None = None,
                           slices=DEFAULT_SLICES, timelimit: float = 30.0,
                           atp_proofs: dict | None = None,
                           every: int = 1, fmt: str = "fof",
                           max_workers: int = DEFAULT_WORKERS) -> EvalMatrix:
    """Strict predict-then-train replay over the corpus.

    Problems are generated for every ``every``-th proved theorem (1 = all,
    10 = the paper-style evaluation subset) at each premise slice and handed
    to every prover.  Rankings can never contain a theorem from the future;
    this is asserted on every step.
    """
    config = config or LearnerConfig()
    ranker = Ranker(config)
    examples = build_examples(corpus, atp_proofs, config.policy,
                              config.mode, config.include_trivial)
    matrix = EvalMatrix()
    pool = ThreadPoolExecutor(max_workers=max_workers)
    try:
        for entry, example in zip(corpus.entries, examples):
            if ranker.trained != entry.index:
                raise EvalError(
                    "predict-then-train violation: model saw %d examples "
                    "before theorem %d" % (ranker.trained, entry.index))
            if entry.kind == KIND_PROVED and entry.index % every == 0:
                candidates = corpus.names_before(entry.index)
                ranking = ranker.rank(example.features, candidates)
                for name in ranking:
                    if corpus.index_of(name) >= entry.index:
                        raise EvalError(
                            f"chronology violation: {name} ranked for {entry.name}")
                jobs = []
                for slc in slices:
                    goal, premises = build_advised_input(
                        corpus, entry.name, ranking, slc)
                    problem = translate_problem(fmt, goal, premises, entry.name)
                    for prover in provers:
                        jobs.append((slc, prover,
                                     pool.submit(prover.run_problem, problem,
                                                 timelimit)))
                for slc, prover, fut in jobs:
                    run = fut.result()
                    matrix.record(entry.name, "%s+%d" % (prover.id, slc), run)
            ranker.train(example)
    finally:
        pool.shutdown()
    return matrix


def run_reproving(corpus: Corpus, provers: list, timelimit: float = 30.0,
                  every: int = 1, fmt: str = "fof",
                  max_workers: int = DEFAULT_WORKERS) -> EvalMatrix:
    """Prove every theorem from exactly its original proof dependencies."""
    matrix = EvalMatrix()
    pool = ThreadPoolExecutor(max_workers=max_workers)
    try:
        jobs = []
        for entry in corpus.entries:
            if entry.kind != KIND_PROVED or entry.index % every != 0:
                continue
            goal, premises = build_reproving_input(corpus, entry.name)
            problem = translate_problem(fmt, goal, premises, entry.name)
            for prover in provers:
                jobs.append((entry.name, prover,
                             pool.submit(prover.run_problem, problem, timelimit)))
        for name, prover, fut in jobs:
            matrix.record(name, prover.id, fut.result())
    finally:
        pool.shutdown()
    return matrix


def proofs_from_matrix(matrix: EvalMatrix) -> dict:
    """name -> {prover: used premise names} for all proved cells."""
    proofs: dict = {}
    for (problem, method), run in matrix.cells.items():
        if run.proved:
            prover = method.partition("+")[0]
            byp = proofs.setdefault(problem, {})
            old = byp.get(prover)
            if old is None or len(run.used_premises) < len(old):
                byp[prover] = list(run.used_premises)
    return proofs


# ---------------------------------------------------------------------------
# Improvement loop


def improvement_loop(corpus: Corpus, provers: list, atp_proofs: dict,
                     rounds: int = 2, config: LearnerConfig | None = None,
                     slices=DEFAULT_SLICES, timelimit: float = 30.0,
                     fmt: str = "fof", minimize: bool = True) -> tuple:
    """Iterate train-on-proofs / advise-all-theorems / keep new proofs.

    Advice premises are restricted to strictly earlier theorems, which
    guards the alternative proofs against cycles.  The proof count is
    non-decreasing per round; stops early at a fixpoint.  Returns the
    augmented proofs and the per-round proved-theorem counts.
    """
    config = config or LearnerConfig(policy=DepPolicy(kind="atponly"))
    proofs = {k: dict(v) if isinstance(v, dict) else {"atp": list(v)}
              for k, v in (atp_proofs or {}).items()}
    counts = [len(proofs)]
    for _ in range(rounds):
        ranker = Ranker(config)
        examples = build_examples(corpus, proofs, config.policy,
                                  config.mode, config.include_trivial)
        for ex in examples:
            ranker.train(ex)
        for entry in corpus.entries:
            if entry.kind != KIND_PROVED:
                continue
            fs = extract_features(entry.statement, config.mode,
                                  config.include_trivial)
            candidates = corpus.names_before(entry.index)
            ranking = ranker.rank(fs.features, candidates)
            for slc in slices:
                goal, premises = build_advised_input(corpus, entry.name,
                                                     ranking, slc)
                problem = translate_problem(fmt, goal, premises, entry.name)
                solved = False
                for prover in provers:
                    run = prover.run_problem(problem, timelimit)
                    if not run.proved:
                        continue
                    solved = True
                    premise_pairs = [(n, corpus.entry(n).statement)
                                     for n in run.used_premises]
                    if minimize:
                        res = pseudo_minimize(prover, entry.name, goal,
                                              premise_pairs, timelimit, fmt)
                        if res.premises is not None:
                            premise_pairs = res.premises
                    kept = [n for n, _ in premise_pairs]
                    byp = proofs.setdefault(entry.name, {})
                    old = byp.get(prover.id)
                    if old is None or len(kept) < len(old):
                        byp[prover.id] = kept
                if solved:
                    break
        counts.append(len(proofs))
        if counts[-1] == counts[-2]:
            break
    return proofs, counts


# ---------------------------------------------------------------------------
# Metrics


@dataclass
class MethodMetrics:
    method: str
    solved: int
    fraction: float
    unique: int
    sotac: float
    sigma_sotac: float
    countersat: int
    sotac_defined: bool = True


@dataclass
class MetricsReport:
    methods: list                      # MethodMetrics, matrix method order
    greedy: list                       # (method, gained, cumulative)
    union_size: int
    problem_count: int

    def method(self, name: str) -> MethodMetrics:
        for m in self.methods:
            if m.method == name:
                return m
        raise KeyError(name)


def compute_metrics(matrix: EvalMatrix, countersat_as_solved: bool = False) -> MetricsReport:
    solved = {}
    for m in matrix.methods:
        s = matrix.solved_by(m)
        if countersat_as_solved:
            s = s | matrix.countersat_by(m)
        solved[m] = s
    solvers_of: dict = {}
    for m, probs in solved.items():
        for p in probs:
            solvers_of[p] = solvers_of.get(p, 0) + 1
    out = []
    n = len(matrix.problems)
    for m in matrix.methods:
        probs = solved[m]
        credits = [1.0 / solvers_of[p] for p in probs]
        sotac = sum(credits) / len(credits) if credits else 0.0
        out.append(MethodMetrics(
            method=m,
            solved=len(probs),
            fraction=(len(probs) / n if n else 0.0),
            unique=sum(1 for p in probs if solvers_of[p] == 1),
            sotac=sotac,
            sigma_sotac=sum(credits),
            countersat=len(matrix.countersat_by(m)),
            sotac_defined=bool(credits),
        ))
    greedy = greedy_cover(matrix, countersat_as_solved=countersat_as_solved)
    union = set().union(*solved.values()) if solved else set()
    return MetricsReport(out, greedy, len(union), n)


def greedy_cover(matrix: EvalMatrix, methods: list | None = None,
                 countersat_as_solved: bool = False) -> list:
    """Greedy max-cover sequence: first the method with most solutions, then
    whichever adds most new ones; ties by method name ascending; stops when
    nothing new is added.  Returns (method, gained, cumulative) triples."""
    methods = list(methods if methods is not None else matrix.methods)
    solved = {}
    for m in methods:
        s = matrix.solved_by(m)
        if countersat_as_solved:
            s = s | matrix.countersat_by(m)
        solved[m] = s
    covered: set = set()
    sequence = []
    remaining = sorted(methods)
    while remaining:
        best = max(remaining, key=lambda m: (len(solved[m] - covered), ))
        gain = len(solved[best] - covered)
        if gain == 0:
            break
        # max() keeps the first maximum; remaining is name-sorted, so ties
        # already resolve to the ascending name
        covered |= solved[best]
        sequence.append((best, gain, len(covered)))
        remaining.remove(best)
    return sequence


def compare_dep_counts(original: dict, advised: dict) -> dict:
    """Rows over the common theorems sorted by original-minus-advised
    dependency count, descending, names breaking ties."""
    common = sorted(set(original) & set(advised))
    rows = [(name, original[name], advised[name], original[name] - advised[name])
            for name in common]
    rows.sort(key=lambda r: (-r[3], r[0]))
    n = len(rows)
    return {
        "rows": rows,
        "mean_original": (sum(r[1] for r in rows) / n if n else 0.0),
        "mean_advised": (sum(r[2] for r in rows) / n if n else 0.0),
    }


# ---------------------------------------------------------------------------
# Plain-text report rendering


def render_metrics_table(report: MetricsReport) -> str:
    headers = ["Method", "Theorem (%)", "Unique", "SOTAC", "Sigma-SOTAC",
               "CounterSat"]
    rows = []
    for m in sorted(report.methods, key=lambda x: (-x.solved, x.method)):
        rows.append([
            m.method,
            "%d (%.1f)" % (m.solved, 100.0 * m.fraction),
            str(m.unique),
            "%.3f" % m.sotac if m.sotac_defined else "0.000*",
            "%.2f" % m.sigma_sotac,
            str(m.countersat),
        ])
    rows.append(["any", "%d (%.1f)" % (
        report.union_size,
        100.0 * report.union_size / report.problem_count if report.problem_count else 0.0),
        "", "", "", ""])
    return _align(headers, rows)


def render_greedy_table(greedy: list, total: int) -> str:
    headers = ["Method", "Gained", "Sum", "Sum %"]
    rows = [[m, str(g), str(c), "%.1f" % (100.0 * c / total if total else 0.0)]
            for m, g, c in greedy]
    return _align(headers, rows)


def render_dep_comparison(cmp: dict) -> str:
    headers = ["Theorem", "Original", "Advised", "Difference"]
    rows = [[n, str(o), str(a), str(d)] for n, o, a, d in cmp["rows"]]
    table = _align(headers, rows)
    return "%s\nmean original: %.2f\nmean advised: %.2f" % (
        table, cmp["mean_original"], cmp["mean_advised"])


def _align(headers: list, rows: list) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(row):
        return "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)
