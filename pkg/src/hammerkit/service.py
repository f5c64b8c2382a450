"""Static online advice over a line-oriented TCP protocol.

One UTF-8, LF-terminated request line holds a conjecture in the term
grammar; the service replies with exactly one line and closes:

    PROVED <prover> <slice> <premise1> <premise2> ...
    RANKING <name1> ... <name32>
    ERROR parse: <message>  /  ERROR type: <message>

The model snapshot is frozen: queries never mutate it, so concurrent
connections share it freely.  Proof attempts run the configured provers on
each premise slice concurrently within the per-query wall-clock budget; the
first Theorem wins and its premise list is pseudo-minimized before the
reply.  When nothing proves within budget the ranking fallback answers.
"""

from __future__ import annotations

import socket
import socketserver
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field

from .corpus import Corpus
from .evaluation import DEFAULT_SLICES, LearnerConfig, Ranker
from .features import extract_features
from .learners import KnnStore, NbModel
from .provers import DEFAULT_WORKERS, pseudo_minimize
from .terms import BOOL, HolError, HolParseError, parse_term, type_of
from .translate import translate_problem

RANKING_LENGTH = 32


@dataclass
class ServiceConfig:
    port: int = 8080
    host: str = "127.0.0.1"
    corpus: Corpus | None = None
    ranker: Ranker | None = None
    provers: list = field(default_factory=list)
    slices: tuple = DEFAULT_SLICES
    budget: float = 30.0
    fmt: str = "fof"
    max_workers: int = DEFAULT_WORKERS


def load_ranker(model_path, learner: str, config: LearnerConfig | None = None) -> Ranker:
    config = config or LearnerConfig(learner=learner)
    ranker = Ranker(config)
    if learner == "nb":
        ranker.model = NbModel.load(model_path)
    else:
        ranker.model = KnnStore.load(model_path)
    return ranker


def handle_query(line: str, config: ServiceConfig) -> str:
    """One conjecture in, one response line out."""
    corpus = config.corpus
    try:
        term = parse_term(line, corpus.signature)
    except HolParseError as e:
        return f"ERROR parse: {e}"
    except HolError as e:
        return f"ERROR type: {e}"
    try:
        if type_of(term) != BOOL:
            return "ERROR type: conjecture must have type bool"
    except HolError as e:
        return f"ERROR type: {e}"

    fs = extract_features(term, config.ranker.config.mode,
                          config.ranker.config.include_trivial)
    candidates = [e.name for e in corpus.entries]
    ranking = config.ranker.rank(fs.features, candidates)

    proved = _try_prove(term, ranking, config)
    if proved is not None:
        prover_id, slc, premises = proved
        return "PROVED %s %d %s" % (prover_id, slc, " ".join(premises))
    return "RANKING %s" % " ".join(ranking[:RANKING_LENGTH])


def _try_prove(goal, ranking, config: ServiceConfig):
    if not config.provers:
        return None
    jobs = []
    pool = ThreadPoolExecutor(max_workers=config.max_workers)
    try:
        for slc in config.slices:
            premises = [(n, config.corpus.entry(n).statement)
                        for n in ranking[:slc]]
            problem = translate_problem(config.fmt, goal, premises, "query")
            for prover in config.provers:
                fut = pool.submit(prover.run_problem, problem, config.budget)
                jobs.append((prover, slc, premises, fut))
        pending = {fut for _, _, _, fut in jobs}
        while pending:
            done, pending = wait(pending, timeout=config.budget,
                                 return_when=FIRST_COMPLETED)
            if not done:
                break  # budget exhausted: fall back to the ranking
            for prover, slc, premises, fut in jobs:
                if fut in done and fut.result().proved:
                    run = fut.result()
                    pairs = [(n, t) for n, t in premises
                             if n in set(run.used_premises)] or premises
                    res = pseudo_minimize(prover, "query", goal, pairs,
                                          config.budget, config.fmt)
                    final = res.premises if res.premises is not None else pairs
                    return prover.id, slc, [n for n, _ in final]
        return None
    finally:
        pool.shutdown(wait=False, cancel_futures=True)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        raw = self.rfile.readline()
        if not raw:
            return
        line = raw.decode("utf-8", errors="replace").rstrip("\r\n")
        response = handle_query(line, self.server.service_config)
        self.wfile.write(response.encode("utf-8") + b"\n")


class AdvisorServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, config: ServiceConfig):
        super().__init__((config.host, config.port), _Handler)
        self.service_config = config

    @property
    def port(self) -> int:
        return self.server_address[1]


def serve(config: ServiceConfig):
    """Run until interrupted; each connection is handled independently."""
    with AdvisorServer(config) as server:
        server.serve_forever()


def query_once(host: str, port: int, line: str, timeout: float = 60.0) -> str:
    """Shell-style client: send one line, read one response."""
    with socket.create_connection((host, port), timeout=timeout) as sock:
        sock.sendall(line.encode("utf-8") + b"\n")
        chunks = []
        while True:
            data = sock.recv(4096)
            if not data:
                break
            chunks.append(data)
            if data.endswith(b"\n"):
                break
    return b"".join(chunks).decode("utf-8").rstrip("\n")
