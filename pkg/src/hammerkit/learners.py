"""Training-example construction and the two premise rankers.

Training examples pair the feature characterization of a theorem with a
weighted label set: the theorem itself (weight 1) plus its dependencies.
How the dependencies are weighted is governed by a policy:

  symsonly     ignore all proofs; a theorem is good for proving itself
  atponly      labels come from the ATP proof when one exists, otherwise
               the example is self-only
  minweight    prefer the ATP proof; otherwise weight each HOL dependency
               by its observed usage likelihood, raising zero-likelihood
               dependencies to a small floor (0.001 or 0.000001)
  nominweight  like minweight but zero-likelihood dependencies are dropped

The naive Bayes ranker keeps sparse label counts t(L) and co-occurrence
counts s(L, f) and scores a candidate L for a query Q as

    ln t(L) + sum over f in Q with s(L,f) > 0 of ln((s(L,f) + s1) / (t(L) * s2))
            + |{f in Q : s(L,f) = 0}| * ln s3

with defaults s1 = 0.05, s2 = 1, s3 = 0.02.  The k-NN ranker scores stored
examples by idf-squared feature overlap, takes the k nearest, and credits
each neighbor's labels (the neighbor itself included through its own
self-label) with the neighbor's similarity.

Training is a serialized chronological fold; ranking against a frozen model
is read-only and may run concurrently.
"""

from __future__ import annotations

import math
import pickle
from collections import Counter
from dataclasses import dataclass, field

from .corpus import ChronologyError, Corpus
from .features import extract_features

MODEL_VERSION = 1

POLICIES = ("minweight", "nominweight", "symsonly", "atponly")
PREFERENCES = ("minimal", "v_pref", "e_pref", "z_pref")

#: prover ids consulted by the *_pref preferences
_PREF_PROVER = {"v_pref": "vampire", "e_pref": "e", "z_pref": "z3"}


@dataclass(frozen=True)
class TrainingExample:
    name: str
    features: frozenset
    labels: dict  # label name -> weight in (0, 1]


@dataclass(frozen=True)
class DepPolicy:
    kind: str = "minweight"
    floor: float = 0.001
    prefer: str = "minimal"
    likelihoods: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ValueError(f"unknown policy {self.kind!r}")
        if self.prefer not in PREFERENCES:
            raise ValueError(f"unknown prover preference {self.prefer!r}")


def _normalize_proofs(atp_proofs: dict) -> dict:
    """Accept either name -> premise list or name -> {prover: premise list}."""
    out = {}
    for name, val in (atp_proofs or {}).items():
        if isinstance(val, dict):
            out[name] = {p: list(deps) for p, deps in val.items()}
        else:
            out[name] = {"atp": list(val)}
    return out


def select_proof(proofs: dict, prefer: str) -> list | None:
    """Pick one premise list out of per-prover proofs."""
    if not proofs:
        return None
    wanted = _PREF_PROVER.get(prefer)
    if wanted is not None and wanted in proofs:
        return proofs[wanted]
    return min(proofs.values(), key=lambda deps: (len(deps), tuple(sorted(deps))))


def usage_likelihoods(corpus: Corpus, atp_proofs: dict, prefer: str = "minimal") -> dict:
    """likelihood(d) = proofs using d / ATP-proved theorems whose HOL proof
    used d, estimated only from theorems that have both kinds of proof."""
    proofs = _normalize_proofs(atp_proofs)
    used = Counter()
    seen = Counter()
    for name, by_prover in proofs.items():
        rec = corpus.deps.get(corpus.aliases.get(name, name))
        if rec is None:
            continue
        chosen = select_proof(by_prover, prefer)
        for d in rec.deps:
            seen[d] += 1
            if d in chosen:
                used[d] += 1
    return {d: used[d] / seen[d] for d in seen}


def build_examples(corpus: Corpus, atp_proofs: dict | None, policy: DepPolicy,
                   mode: str = "symst", include_trivial: bool = False) -> list:
    """One training example per corpus entry, chronological order."""
    proofs = _normalize_proofs(atp_proofs or {})
    examples = []
    for entry in corpus.entries:
        fs = extract_features(entry.statement, mode, include_trivial)
        labels = {entry.name: 1.0}
        rec = corpus.deps.get(entry.name)
        atp = select_proof(proofs.get(entry.name, {}), policy.prefer)
        if policy.kind == "symsonly":
            pass
        elif policy.kind == "atponly":
            if atp is not None:
                for d in atp:
                    labels.setdefault(d, 1.0)
        elif atp is not None:
            for d in atp:
                labels.setdefault(d, 1.0)
        elif rec is not None:
            for d in rec.deps:
                # no usage data at all means the dependency is trusted
                w = policy.likelihoods.get(d, 1.0)
                if w <= 0.0:
                    if policy.kind == "nominweight":
                        continue
                    w = policy.floor
                labels.setdefault(d, w)
        for d in labels:
            if corpus.index_of(d) > entry.index:
                raise ChronologyError(
                    f"label {d} of {entry.name} violates chronology")
        examples.append(TrainingExample(entry.name, fs.features, labels))
    return examples


# ---------------------------------------------------------------------------
# Naive Bayes


@dataclass(frozen=True)
class NbParams:
    sigma1: float = 0.05
    sigma2: float = 1.0
    sigma3: float = 0.02


@dataclass
class NbModel:
    params: NbParams = field(default_factory=NbParams)
    t: dict = field(default_factory=dict)        # label -> weighted count
    s: dict = field(default_factory=dict)        # label -> {feature: count}
    total: int = 0                               # examples trained on
    vocabulary: set = field(default_factory=set)

    def save(self, path):
        _save_model(path, "nb", self)

    @staticmethod
    def load(path) -> "NbModel":
        return _load_model(path, "nb")


def nb_update(model: NbModel, example: TrainingExample) -> NbModel:
    """Incremental update; O(|features| * |labels|).  Returns the model."""
    model.total += 1
    model.vocabulary |= example.features
    for label, weight in example.labels.items():
        model.t[label] = model.t.get(label, 0.0) + weight
        cof = model.s.setdefault(label, {})
        for f in example.features:
            cof[f] = cof.get(f, 0.0) + weight
    return model


def nb_score(model: NbModel, query, label: str) -> float:
    t = model.t.get(label, 0.0)
    if t <= 0.0:
        return float("-inf")
    p = model.params
    cof = model.s.get(label, {})
    score = math.log(t)
    absent = 0
    for f in query:
        sf = cof.get(f, 0.0)
        if sf > 0.0:
            score += math.log((sf + p.sigma1) / (t * p.sigma2))
        else:
            absent += 1
    return score + absent * math.log(p.sigma3)


def nb_rank(model: NbModel, query, candidates: list) -> list:
    """Candidates in descending score order, ties broken by name.  An
    empty model falls back to the given (chronological) candidate order."""
    if model.total == 0:
        return list(candidates)
    scored = sorted(
        ((-nb_score(model, query, c), c) for c in candidates),
        key=lambda pair: (pair[0], pair[1]))
    return [c for _, c in scored]


# ---------------------------------------------------------------------------
# k-nearest neighbor

KNN_PROFILES = (10, 40, 160)


@dataclass
class KnnStore:
    examples: list = field(default_factory=list)   # TrainingExample, chronological
    df: Counter = field(default_factory=Counter)   # feature -> document frequency

    @property
    def total(self) -> int:
        return len(self.examples)

    def add(self, example: TrainingExample):
        self.examples.append(example)
        for f in example.features:
            self.df[f] += 1

    def idf(self, feature) -> float:
        return math.log(self.total / (1 + self.df.get(feature, 0)))

    def save(self, path):
        _save_model(path, "knn", self)

    @staticmethod
    def load(path) -> "KnnStore":
        return _load_model(path, "knn")


def knn_similarity(store: KnnStore, query, example: TrainingExample) -> float:
    return sum(store.idf(f) ** 2 for f in query if f in example.features)


def knn_rank(store: KnnStore, query, k: int, candidates: list) -> list:
    """Frequency ranking over the k most similar stored examples, weighted
    by similarity.  An empty store falls back to candidate order."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if store.total == 0:
        return list(candidates)
    sims = [(knn_similarity(store, query, ex), i, ex)
            for i, ex in enumerate(store.examples)]
    sims.sort(key=lambda t: (-t[0], t[1]))
    neighbors = sims[:k]
    scores: dict = {}
    for sim, _, ex in neighbors:
        if sim <= 0.0:
            continue
        for label, weight in ex.labels.items():
            scores[label] = scores.get(label, 0.0) + sim * weight
    allowed = set(candidates)
    scored = sorted(
        ((-scores.get(c, 0.0), c) for c in allowed),
        key=lambda pair: (pair[0], pair[1]))
    return [c for _, c in scored]


# ---------------------------------------------------------------------------
# Snapshots and ranking files


def _save_model(path, kind: str, model):
    with open(path, "wb") as fh:
        pickle.dump({"version": MODEL_VERSION, "kind": kind, "model": model}, fh)


def _load_model(path, kind: str):
    with open(path, "rb") as fh:
        blob = pickle.load(fh)
    if blob.get("version") != MODEL_VERSION or blob.get("kind") != kind:
        raise ValueError(f"incompatible model snapshot {path}")
    return blob["model"]


def write_ranking_file(path, rankings: dict):
    """``name: premise1 premise2 ...`` lines, insertion order."""
    with open(path, "w", encoding="utf-8") as fh:
        for name, ranking in rankings.items():
            fh.write("%s: %s\n" % (name, " ".join(ranking)))


def read_ranking_file(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            name, rest = line.split(":", 1)
            out[name.strip()] = rest.split()
    return out
