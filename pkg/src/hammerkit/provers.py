"""External prover execution, SZS result parsing, and proof minimization.

External provers are described by a command template with ``{file}`` and
``{timelimit}`` placeholders; runs are hard-killed one second past the time
limit.  The SZS status line decides the outcome and used premises are
recovered from the proof output by collecting ``file(..., name)`` source
annotations plus any bare axiom labels of the problem.

A deterministic fixture prover stands in for real ATPs in tests and the
desk-scale pipeline.  Its syntactic mode works on the FOF output fragment
of ground atoms and implications between them, closing the atom set by unit
forward chaining up to a bounded depth; its oracle mode replays scripted
results.  Both modes are also reachable through the normal subprocess path
(``hammerkit fixture-prove``), so the runner machinery is exercised end to
end without external binaries.
"""

from __future__ import annotations

import re
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

from .translate import FoProblem

THEOREM = "Theorem"
COUNTERSAT = "CounterSatisfiable"
TIMEOUT = "Timeout"
GAVEUP = "GaveUp"
ERROR = "Error"

GRACE_SECONDS = 1.0
DEFAULT_WORKERS = 14
CHAIN_DEPTH = 8

_SZS_MAP = {
    "Theorem": THEOREM, "Unsatisfiable": THEOREM, "ContradictoryAxioms": THEOREM,
    "CounterSatisfiable": COUNTERSAT, "Satisfiable": COUNTERSAT,
    "Timeout": TIMEOUT, "ResourceOut": TIMEOUT,
    "GaveUp": GAVEUP, "Unknown": GAVEUP, "Incomplete": GAVEUP,
}

_SZS_RE = re.compile(r"SZS status (\w+)")
_FILE_SRC_RE = re.compile(r"file\(\s*[^,()]*,\s*(\w+)\s*\)")
_WORD_RE = re.compile(r"\b\w+\b")


@dataclass(frozen=True)
class ProverSpec:
    id: str
    command: str
    formats: tuple = ("fof",)
    proof_producing: bool = True

    def __post_init__(self):
        if "{file}" not in self.command:
            raise ValueError(f"prover {self.id}: command template lacks {{file}}")


@dataclass(frozen=True)
class ProverRun:
    prover: str
    problem: str
    status: str
    seconds: float = 0.0
    used_premises: tuple = ()

    @property
    def proved(self) -> bool:
        return self.status == THEOREM


def read_prover_config(path) -> list:
    """One spec per line: ``id | format | command template``."""
    specs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split("|", 2)]
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'id | format | command'")
            specs.append(ProverSpec(parts[0], parts[2], tuple(parts[1].split(","))))
    return specs


def read_premise_map(path) -> dict:
    """label -> source name from the problem file's comment header."""
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("% hammerkit_premise "):
                _, _, label, name = line.split(None, 3)
                mapping[label] = name.strip()
            elif not line.startswith("%"):
                break
    return mapping


def parse_used_premises(output: str, premise_map: dict) -> tuple:
    """Axiom names referenced in a proof, mapped back to source names."""
    used = set()
    for m in _FILE_SRC_RE.finditer(output):
        if m.group(1) in premise_map:
            used.add(premise_map[m.group(1)])
    words = set(_WORD_RE.findall(output))
    for label, name in premise_map.items():
        if label in words:
            used.add(name)
    return tuple(sorted(used))


def run_prover(spec: ProverSpec, problem_file, timelimit: float,
               premise_map: dict | None = None) -> ProverRun:
    """Launch one prover on one problem file under a hard deadline."""
    problem_file = str(problem_file)
    if premise_map is None:
        premise_map = read_premise_map(problem_file)
    argv = shlex.split(spec.command.format(file=problem_file, timelimit=timelimit))
    start = time.monotonic()
    try:
        proc = subprocess.run(
            argv, capture_output=True, text=True,
            timeout=timelimit + GRACE_SECONDS)
        output = proc.stdout + "\n" + proc.stderr
    except subprocess.TimeoutExpired:
        return ProverRun(spec.id, problem_file, TIMEOUT,
                         time.monotonic() - start)
    except OSError:
        return ProverRun(spec.id, problem_file, ERROR,
                         time.monotonic() - start)
    elapsed = time.monotonic() - start
    m = _SZS_RE.search(output)
    if m is None:
        return ProverRun(spec.id, problem_file, ERROR, elapsed)
    status = _SZS_MAP.get(m.group(1), GAVEUP)
    used = ()
    if status == THEOREM:
        used = parse_used_premises(output, premise_map)
    return ProverRun(spec.id, problem_file, status, elapsed, used)


# ---------------------------------------------------------------------------
# Fixture prover

_VAR_TOKEN = re.compile(r"\b[A-Z]\w*\b")
_IMP_RE = re.compile(r"^\((.+) => (.+)\)$")


def _canonical_fof(text: str) -> str:
    """Rename FOF variables to V0, V1, ... by first occurrence so that
    alpha-equal statements serialize identically."""
    seen: dict = {}

    def rep(m):
        w = m.group(0)
        if w not in seen:
            seen[w] = "V%d" % len(seen)
        return seen[w]

    return _VAR_TOKEN.sub(rep, text)


def _fof_units(problem: FoProblem):
    """(facts, rules) in FOF text form: facts are ground formulas, rules are
    top-level ``(a => b)`` implications between ground formulas."""
    facts = []
    rules = []
    for label, text in problem.axioms:
        if _VAR_TOKEN.search(text):
            continue  # quantified or otherwise non-ground: outside the fragment
        m = _IMP_RE.match(text)
        if m and "=>" not in m.group(1) and "=>" not in m.group(2):
            rules.append((label, m.group(1), m.group(2)))
        else:
            facts.append((label, text))
    return facts, rules


@dataclass
class FixtureProver:
    """Deterministic stand-in prover.

    oracle mode: ``table`` maps a problem id to a list of scripted
    (status, used_premises) outcomes consumed one per call (the last entry
    repeats).  syntactic mode: sound unit forward chaining over the ground
    atom/implication fragment of the FOF output, depth-bounded.
    """

    id: str = "fixture"
    depth: int = CHAIN_DEPTH
    table: dict | None = None
    _cursor: dict = field(default_factory=dict)

    def run_problem(self, problem: FoProblem, timelimit: float = 30.0) -> ProverRun:
        if self.table is not None:
            return self._from_table(problem)
        return self._chain(problem)

    def _from_table(self, problem: FoProblem) -> ProverRun:
        key = problem.goal_name
        scripted = self.table.get(key)
        if not scripted:
            return ProverRun(self.id, key, GAVEUP)
        n = self._cursor.get(key, 0)
        status, used = scripted[min(n, len(scripted) - 1)]
        self._cursor[key] = n + 1
        return ProverRun(self.id, key, status, 0.0, tuple(used))

    def _chain(self, problem: FoProblem) -> ProverRun:
        facts, rules = _fof_units(problem)
        goal = _canonical_fof(problem.conjecture[1])
        known: dict = {}  # canonical fact text -> set of supporting labels
        for label, text in facts:
            known.setdefault(text, {label})
        for label, text in problem.axioms:
            # a conjecture alpha-equal to an axiom is proved outright
            if _canonical_fof(text) == goal:
                return self._result(problem, {problem.premise_names.get(label, label)})
        for _ in range(self.depth):
            new = {}
            for label, lhs, rhs in rules:
                if lhs in known and rhs not in known:
                    new.setdefault(rhs, known[lhs] | {label})
            if not new:
                break
            known.update(new)
            if goal in known:
                break
        if goal in known:
            used = {problem.premise_names.get(l, l) for l in known[goal]}
            return self._result(problem, used)
        return ProverRun(self.id, problem.goal_name, GAVEUP)

    def _result(self, problem: FoProblem, used: set) -> ProverRun:
        premises = set(problem.premise_names.values())
        return ProverRun(self.id, problem.goal_name, THEOREM, 0.0,
                         tuple(sorted(used & premises)))

    def prove_file(self, path) -> str:
        """SZS-formatted output for a serialized FOF problem, for use as a
        subprocess prover in tests."""
        problem = parse_fof_file(path)
        run = self.run_problem(problem)
        lines = ["% SZS status %s for %s" % (run.status, path)]
        if run.proved:
            lines.append("% SZS output start Proof")
            inverse = {v: k for k, v in problem.premise_names.items()}
            for name in run.used_premises:
                lines.append("fof(%s, axiom, used, file('%s', %s))."
                             % (inverse.get(name, name), path, inverse.get(name, name)))
            lines.append("% SZS output end Proof")
        return "\n".join(lines) + "\n"


_FOF_LINE = re.compile(r"^(fof|tff|thf)\((\w+),\s*(axiom|conjecture),\s*(.*)\)\.\s*$")


def parse_fof_file(path) -> FoProblem:
    """Re-read a serialized problem (formula lines and premise comments)."""
    problem = FoProblem(format="fof")
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("% hammerkit_premise "):
                _, _, label, name = line.split(None, 3)
                problem.premise_names[label] = name
            elif line.startswith("% problem: "):
                problem.goal_name = line[len("% problem: "):]
            elif _FOF_LINE.match(line):
                m = _FOF_LINE.match(line)
                if m.group(3) == "conjecture":
                    problem.conjecture = (m.group(2), m.group(4))
                else:
                    problem.axioms.append((m.group(2), m.group(4)))
    return problem


# ---------------------------------------------------------------------------
# Subprocess-backed prover with the same interface as the fixture


@dataclass
class ExternalProver:
    spec: ProverSpec
    workdir: Path
    timelimit: float = 30.0

    @property
    def id(self) -> str:
        return self.spec.id

    def run_problem(self, problem: FoProblem, timelimit: float | None = None) -> ProverRun:
        self.workdir.mkdir(parents=True, exist_ok=True)
        path = self.workdir / ("%s.p" % re.sub(r"\W+", "_", problem.goal_name or "problem"))
        path.write_text(problem.serialize(), encoding="utf-8")
        run = run_prover(self.spec, path, timelimit or self.timelimit,
                         problem.premise_names)
        return ProverRun(self.id, problem.goal_name, run.status, run.seconds,
                         run.used_premises)


# ---------------------------------------------------------------------------
# Minimization


@dataclass
class MinimizeResult:
    premises: list | None     # None when even the first run fails
    runs: int
    sizes: list               # used-premise count after each run


def pseudo_minimize(prover, goal_name: str, goal, premises: list,
                    timelimit: float = 30.0, fmt: str = "fof",
                    builder=None) -> MinimizeResult:
    """Re-prove from exactly the previously used premises until the count
    stabilizes.  Provers are not monotone in the premise count, so a failing
    re-run returns the last successful set."""
    from .translate import translate_problem
    build = builder or (lambda name, prems: translate_problem(fmt, goal, prems, name))
    current = list(premises)
    best = None
    runs = 0
    sizes = []
    while True:
        problem = build(goal_name, current)
        run = prover.run_problem(problem, timelimit)
        runs += 1
        if not run.proved:
            return MinimizeResult(best, runs, sizes)
        used = set(run.used_premises)
        kept = [(n, t) for n, t in current if n in used]
        sizes.append(len(kept))
        best = kept
        if len(kept) >= len(current):
            return MinimizeResult(best, runs, sizes)
        current = kept


def cross_minimize(provers: list, proofs: dict, goals: dict,
                   timelimit: float = 30.0, fmt: str = "fof",
                   builder=None) -> dict:
    """Minimize every known proof with every prover; per prover keep the
    smallest premise set that still succeeds.

    ``proofs`` maps theorem name to one premise list or a list of premise
    lists (each a list of (name, statement) pairs); ``goals`` maps theorem
    name to its statement.
    """
    out: dict = {}
    for name in sorted(proofs):
        candidate_sets = proofs[name]
        if candidate_sets and isinstance(candidate_sets[0], tuple):
            candidate_sets = [candidate_sets]
        per_prover: dict = {}
        for prover in provers:
            best = None
            for premises in candidate_sets:
                res = pseudo_minimize(prover, name, goals[name], premises,
                                      timelimit, fmt, builder=builder)
                if res.premises is not None:
                    if best is None or len(res.premises) < len(best):
                        best = res.premises
            if best is not None:
                per_prover[prover.id] = best
        if per_prover:
            out[name] = per_prover
    return out
