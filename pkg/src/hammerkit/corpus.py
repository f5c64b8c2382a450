"""Chronological theorem corpus: ingestion, normalization, problem inputs.

Inputs are three plain-text files:

  statements  one record per line, ``name<TAB>term-text`` (UTF-8, LF)
  deps        one line per theorem, ``name: dep1 dep2 ...``, file order is
              chronological order
  trivial     one name per line; these are dropped from premise lists

A signature file may accompany the statements with lines
``tycon name arity``, ``const name type-text`` and
``overload surface export type-text``.

Ingestion is a single serialized pass (order matters).  Statements are
beta-normalized, split into conjuncts, and de-duplicated by alpha-equality;
the first name associated with a statement is canonical and later names
become aliases.  The resulting corpus is immutable and freely shared.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass, field

from .terms import (
    BOOL, Abs, App, Const, HolError, HolTerm, Signature, Var,
    alpha_equal, beta_normalize, binder_split, free_vars, mk_conj,
    mk_forall, parse_term, parse_type, print_term, strip_forall, type_of,
)

CACHE_VERSION = 1

KIND_PROVED = "proved"
KIND_DEFINITION = "definition-or-axiom"


class CorpusError(HolError):
    pass


class ChronologyError(CorpusError):
    pass


@dataclass(frozen=True)
class TheoremEntry:
    name: str
    index: int
    statement: HolTerm
    kind: str = KIND_PROVED


@dataclass(frozen=True)
class DepRecord:
    name: str
    deps: tuple


@dataclass
class Corpus:
    entries: list = field(default_factory=list)
    deps: dict = field(default_factory=dict)
    aliases: dict = field(default_factory=dict)
    trivial: set = field(default_factory=set)
    signature: Signature = field(default_factory=Signature)
    by_name: dict = field(default_factory=dict)

    def entry(self, name: str) -> TheoremEntry:
        name = self.aliases.get(name, name)
        e = self.by_name.get(name)
        if e is None:
            raise CorpusError(f"unknown theorem {name}")
        return e

    def index_of(self, name: str) -> int:
        return self.entry(name).index

    def names_before(self, index: int) -> list:
        return [e.name for e in self.entries[:index]]

    def check_chronology(self):
        """Every dependency strictly precedes its owner."""
        for rec in self.deps.values():
            owner = self.index_of(rec.name)
            for d in rec.deps:
                if self.index_of(d) >= owner:
                    raise ChronologyError(
                        f"dependency {d} of {rec.name} does not precede it")

    def save(self, path):
        with open(path, "wb") as fh:
            pickle.dump({"version": CACHE_VERSION, "corpus": self}, fh)

    @staticmethod
    def load(path) -> "Corpus":
        with open(path, "rb") as fh:
            blob = pickle.load(fh)
        if blob.get("version") != CACHE_VERSION:
            raise CorpusError(f"unsupported corpus cache version {blob.get('version')}")
        return blob["corpus"]


# ---------------------------------------------------------------------------
# Conjunct splitting


def _conjuncts(t: HolTerm) -> list:
    if isinstance(t, App) and isinstance(t.fun, App) and \
            isinstance(t.fun.fun, Const) and t.fun.fun.name == "conj":
        return _conjuncts(t.fun.arg) + _conjuncts(t.arg)
    return [t]


def _requantify(binders: list, body: HolTerm) -> HolTerm:
    """Re-wrap only the binders whose variable occurs free in the body."""
    fv = set(free_vars(body))
    keep = [v for v in binders if v in fv]
    for v in reversed(keep):
        body = mk_forall(v, body)
    return body


def split_conjuncts(entry: TheoremEntry) -> list:
    """Split a top-level conjunction into ``<name>_conjunctN`` entries.

    Outer universal quantifiers are stripped first and re-distributed onto
    each conjunct.  Non-conjunctive statements come back as a singleton with
    the original name.
    """
    binders, body = strip_forall(entry.statement)
    parts = _conjuncts(body)
    if len(parts) == 1:
        return [entry]
    return [
        TheoremEntry("%s_conjunct%d" % (entry.name, i), entry.index,
                     _requantify(binders, part), entry.kind)
        for i, part in enumerate(parts)
    ]


def conjoin_all(statements: list) -> HolTerm:
    """Right-nested conjunction of the given boolean statements."""
    out = statements[-1]
    for s in reversed(statements[:-1]):
        out = mk_conj(s, out)
    return out


# ---------------------------------------------------------------------------
# Unnamed-dependency expansion


def expand_unnamed(raw_deps: dict, names: dict) -> dict:
    """Replace unnamed integer dependencies by their own dependencies.

    ``raw_deps`` maps an integer id to a sequence of integer ids; ``names``
    maps the ids that carry a name.  Expansion recurses until only named ids
    remain, de-duplicates, and keeps first-appearance order.  A cycle in the
    raw graph signals a corrupt export and raises.
    """
    cache: dict = {}

    def expand(i, stack):
        if i in cache:
            return cache[i]
        if i in stack:
            raise CorpusError(f"cyclic dependency export at id {i}")
        out = []
        seen = set()
        for d in raw_deps.get(i, ()):
            if d in names:
                if names[d] not in seen:
                    seen.add(names[d])
                    out.append(names[d])
            else:
                for n in expand(d, stack | {i}):
                    if n not in seen:
                        seen.add(n)
                        out.append(n)
        cache[i] = out
        return out

    result = {}
    for i, name in sorted(names.items()):
        deps = []
        seen = set()
        for d in raw_deps.get(i, ()):
            sub = [names[d]] if d in names else expand(d, {i})
            for n in sub:
                if n not in seen:
                    seen.add(n)
                    deps.append(n)
        result[name] = DepRecord(name, tuple(deps))
    return result


# ---------------------------------------------------------------------------
# Ingestion


def read_signature_file(path, sig: Signature):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            kind, rest = line.split(None, 1)
            if kind == "tycon":
                name, arity = rest.split()
                sig.declare_tycon(name, int(arity))
            elif kind == "const":
                name, tytext = rest.split(None, 1)
                sig.declare_const(name, parse_type(tytext, sig))
            elif kind == "overload":
                surface, export, tytext = rest.split(None, 2)
                sig.declare_overload(surface, export, parse_type(tytext, sig))
            else:
                raise CorpusError(f"{path}:{lineno}: unknown declaration {kind!r}")


def read_statements(path, sig: Signature):
    """Yield (name, beta-normalized statement) pairs in file order."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            try:
                name, text = line.split("\t", 1)
            except ValueError:
                raise CorpusError(f"{path}:{lineno}: expected name<TAB>term") from None
            term = parse_term(text, sig)
            if type_of(term) != BOOL:
                raise CorpusError(f"{path}:{lineno}: statement {name} is not boolean")
            yield name, beta_normalize(term)


def read_deps_file(path) -> list:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise CorpusError(f"{path}:{lineno}: expected 'name: deps...'")
            name, rest = line.split(":", 1)
            records.append((name.strip(), tuple(rest.split())))
    return records


def read_name_list(path) -> set:
    with open(path, encoding="utf-8") as fh:
        return {line.strip() for line in fh if line.strip() and not line.startswith("#")}


def ingest(statements_path, deps_path=None, trivial_path=None,
           signature_path=None, split=True) -> Corpus:
    sig = Signature()
    if signature_path:
        read_signature_file(signature_path, sig)
    corpus = Corpus(signature=sig)
    seen_prints: dict = {}

    for name, stmt in read_statements(statements_path, sig):
        raw = TheoremEntry(name, 0, stmt)
        parts = split_conjuncts(raw) if split else [raw]
        for part in parts:
            key = print_term(part.statement)
            canonical = seen_prints.get(key)
            if canonical is not None:
                # later names for an alpha-equal statement become aliases
                corpus.aliases[part.name] = canonical
                continue
            entry = TheoremEntry(part.name, len(corpus.entries), part.statement)
            if part.name in corpus.by_name:
                raise CorpusError(f"duplicate theorem name {part.name}")
            corpus.entries.append(entry)
            corpus.by_name[part.name] = entry
            seen_prints[key] = part.name

    if deps_path:
        for name, deps in read_deps_file(deps_path):
            canonical = corpus.aliases.get(name, name)
            if canonical not in corpus.by_name:
                raise CorpusError(f"dependency record for unknown theorem {name}")
            resolved = []
            seen = set()
            for d in deps:
                r = corpus.aliases.get(d, d)
                if r not in corpus.by_name:
                    raise CorpusError(f"unknown dependency {d} of {name}")
                if r not in seen:
                    seen.add(r)
                    resolved.append(r)
            corpus.deps[canonical] = DepRecord(canonical, tuple(resolved))

    if trivial_path:
        corpus.trivial = {corpus.aliases.get(n, n) for n in read_name_list(trivial_path)}

    # entries without a dependency record are definitions or axioms
    refreshed = []
    for e in corpus.entries:
        kind = KIND_PROVED if e.name in corpus.deps else KIND_DEFINITION
        e2 = TheoremEntry(e.name, e.index, e.statement, kind)
        refreshed.append(e2)
        corpus.by_name[e.name] = e2
    corpus.entries = refreshed

    corpus.check_chronology()
    sig.seal()
    return corpus


# ---------------------------------------------------------------------------
# Problem inputs


def build_reproving_input(corpus: Corpus, name: str):
    """Goal plus the premises of its original proof, trivial names dropped."""
    entry = corpus.entry(name)
    if entry.kind != KIND_PROVED:
        raise CorpusError(f"{name} is a definition or axiom; no re-proving problem")
    rec = corpus.deps[entry.name]
    premises = [
        (d, corpus.entry(d).statement)
        for d in rec.deps
        if d not in corpus.trivial
    ]
    return entry.statement, premises


def build_advised_input(corpus: Corpus, name: str, ranking: list, slice_size: int):
    """Goal plus the top ``slice_size`` entries of a premise ranking."""
    entry = corpus.entry(name)
    for r in ranking:
        if corpus.index_of(r) >= entry.index:
            raise ChronologyError(
                f"ranking for {name} contains non-earlier theorem {r}")
    picked = ranking[:slice_size]
    return entry.statement, [(r, corpus.entry(r).statement) for r in picked]
