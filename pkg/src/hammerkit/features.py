"""String-feature characterization of statements.

A statement is described by four kinds of strings, all printed through a
compact applicative printer (constants by name, normalized variables by
their mode name, application as ``(f a b)``, abstraction as ``(\\ v body)``):

  * symbols: every constant name plus every type constructor name occurring
    anywhere in the statement.  The nine purely-logical constants (the
    connectives, quantifiers, truth values and the choice operator) are
    filtered out unless trivial symbols are requested; equality is kept.
  * types: the normalized type of every term variable and the component
    types thereof, recursively, printed as ``A<type>``.  The bare ``bool``
    type and bare type variables carry no information and are skipped.
  * atoms: every boolean subterm whose head constant is not logical.
    Equality acts as formula structure here, so equations are decomposed
    into their sides but not collected themselves.
  * subterms: every component term of an atom, recursively, down to
    variables; bare constants are already covered by their symbol feature.

Variable normalization modes:

  syms0   every term variable becomes A0
  syms    free variables numbered first (A0, A1, ...), bound variables
          continue the numbering in binder order
  symst   a variable is named after its normalized type, e.g. Areal
  symsd   like symst, but type variables get per-statement serial numbers
          (A0, A1, ... by first occurrence) instead of collapsing to A,
          making most term features disjoint across statements

Extraction is pure; running it over a corpus is embarrassingly parallel.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .terms import (
    BOOL, Abs, App, Const, FILTERED_LOGICAL, HolTerm, HolType, TyApp, TyVar,
    Var, app_spine, subst_term_types, term_type_vars, type_of,
)

MODES = ("syms0", "syms", "symst", "symsd")

#: constants treated as formula structure when collecting atomic formulas
_STRUCTURAL = FILTERED_LOGICAL | {"eq"}


@dataclass(frozen=True)
class NormMode:
    mode: str = "symst"
    include_trivial: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown normalization mode {self.mode!r}")


@dataclass
class FeatureSet:
    features: frozenset
    counts: Counter | None = None

    def __iter__(self):
        return iter(self.features)

    def __len__(self):
        return len(self.features)

    def __contains__(self, f):
        return f in self.features

    def sorted(self) -> list:
        return sorted(self.features)


def _print_type(ty: HolType) -> str:
    if isinstance(ty, TyVar):
        return ty.name
    if not ty.args:
        return ty.con
    return "(%s %s)" % (ty.con, " ".join(_print_type(a) for a in ty.args))


def _normalize_tyvars(statement: HolTerm, mode: str) -> HolTerm:
    tvs = term_type_vars(statement)
    if mode == "symsd":
        mapping = {name: TyVar("A%d" % i) for i, name in enumerate(tvs)}
    else:
        mapping = {name: TyVar("A") for name in tvs}
    return subst_term_types(statement, mapping) if mapping else statement


def _rename_variables(statement: HolTerm, mode: str) -> HolTerm:
    """Rewrite every variable name according to the mode.  Distinct
    variables may deliberately collapse onto one name; the result is only
    ever printed, never evaluated."""
    if mode in ("symst", "symsd"):
        def go(t):
            if isinstance(t, Var):
                return Var("A" + _print_type(t.ty), t.ty)
            if isinstance(t, Const):
                return t
            if isinstance(t, App):
                return _raw_app(go(t.fun), go(t.arg))
            return Abs(Var("A" + _print_type(t.var.ty), t.var.ty), go(t.body))
        return go(statement)

    if mode == "syms0":
        def go(t):
            if isinstance(t, Var):
                return Var("A0", t.ty)
            if isinstance(t, Const):
                return t
            if isinstance(t, App):
                return _raw_app(go(t.fun), go(t.arg))
            return Abs(Var("A0", t.var.ty), go(t.body))
        return go(statement)

    # syms: number free variables first, then binders in binder order
    counter = [0]
    free_names: dict = {}

    def note_free(t, bound):
        if isinstance(t, Var):
            if t not in bound and t not in free_names:
                free_names[t] = "A%d" % counter[0]
                counter[0] += 1
        elif isinstance(t, App):
            note_free(t.fun, bound)
            note_free(t.arg, bound)
        elif isinstance(t, Abs):
            note_free(t.body, bound | {t.var})

    note_free(statement, frozenset())

    def go(t, env):
        if isinstance(t, Var):
            name = env.get(t) or free_names.get(t, "A0")
            return Var(name, t.ty)
        if isinstance(t, Const):
            return t
        if isinstance(t, App):
            return _raw_app(go(t.fun, env), go(t.arg, env))
        name = "A%d" % counter[0]
        counter[0] += 1
        env2 = dict(env)
        env2[t.var] = name
        return Abs(Var(name, t.var.ty), go(t.body, env2))

    return go(statement, {})


def _raw_app(fun, arg) -> App:
    """App without the well-typedness check; renaming may conflate
    differently-typed variables on purpose."""
    a = object.__new__(App)
    object.__setattr__(a, "fun", fun)
    object.__setattr__(a, "arg", arg)
    return a


class _Collector:
    def __init__(self, include_trivial: bool):
        self.include_trivial = include_trivial
        self.symbols: set = set()
        self.types: set = set()
        self.terms: set = set()
        self.counts: Counter = Counter()

    def add_symbol(self, name: str):
        self.symbols.add(name)
        self.counts[name] += 1

    def add_type_ctors(self, ty: HolType):
        if isinstance(ty, TyApp):
            self.add_symbol(ty.con)
            for a in ty.args:
                self.add_type_ctors(a)

    def add_var_type(self, ty: HolType):
        if isinstance(ty, TyVar) or ty == BOOL:
            return
        s = "A" + _print_type(ty)
        self.types.add(s)
        self.counts[s] += 1
        for a in ty.args:
            self.add_var_type(a)

    def add_term(self, s: str):
        self.terms.add(s)
        self.counts[s] += 1

    # -- traversal ----------------------------------------------------------

    def formula(self, t: HolTerm):
        head, args = app_spine(t)
        if isinstance(head, Const) and head.name in _STRUCTURAL:
            self.add_symbol(head.name)
            self.add_type_ctors(head.ty)
            if head.name in ("forall", "exists") and len(args) == 1 \
                    and isinstance(args[0], Abs):
                ab = args[0]
                self.add_var_type(ab.var.ty)
                self.add_type_ctors(ab.var.ty)
                self.formula(ab.body)
                return
            for a in args:
                if type_of(a) == BOOL:
                    self.formula(a)
                else:
                    self.term(a)
            return
        if isinstance(t, Var):
            self.term(t)
            return
        # an atomic formula: a boolean term with a non-structural head
        self.add_term(print_feature_term(t))
        self.components(t)

    def term(self, t: HolTerm):
        if not isinstance(t, Const):
            self.add_term(print_feature_term(t))
        self.components(t)

    def components(self, t: HolTerm):
        if isinstance(t, Var):
            self.add_var_type(t.ty)
            self.add_type_ctors(t.ty)
        elif isinstance(t, Const):
            self.add_symbol(t.name)
            self.add_type_ctors(t.ty)
        elif isinstance(t, Abs):
            self.add_var_type(t.var.ty)
            self.add_type_ctors(t.var.ty)
            self.term(t.body)
        else:
            head, args = app_spine(t)
            self.term(head)
            for a in args:
                self.term(a)

    def result(self) -> set:
        feats = self.terms | self.types | {
            s for s in self.symbols
            if self.include_trivial or s not in FILTERED_LOGICAL
        }
        return feats


def print_feature_term(t: HolTerm) -> str:
    if isinstance(t, (Var, Const)):
        return t.name
    if isinstance(t, Abs):
        return "(\\ %s %s)" % (t.var.name, print_feature_term(t.body))
    head, args = app_spine(t)
    parts = [print_feature_term(head)] + [print_feature_term(a) for a in args]
    return "(%s)" % " ".join(parts)


def extract_features(statement: HolTerm, mode: NormMode | str = "symst",
                     include_trivial: bool = False) -> FeatureSet:
    """Feature set of a beta-normalized, type-correct statement."""
    if isinstance(mode, str):
        mode = NormMode(mode, include_trivial)
    normalized = _normalize_tyvars(statement, mode.mode)
    renamed = _rename_variables(normalized, mode.mode)
    coll = _Collector(mode.include_trivial)
    coll.formula(renamed)
    feats = coll.result()
    counts = Counter({f: coll.counts[f] for f in feats})
    return FeatureSet(frozenset(feats), counts)


def format_feature_line(name: str, fs: FeatureSet) -> str:
    return "%s: %s" % (name, ", ".join('"%s"' % f for f in fs.sorted()))


def write_feature_file(corpus, path, mode: NormMode | str = "symst",
                       include_trivial: bool = False):
    """One line per theorem, chronological order, deterministic feature
    ordering.  Re-running produces byte-identical files."""
    with open(path, "w", encoding="utf-8") as fh:
        for entry in corpus.entries:
            fs = extract_features(entry.statement, mode, include_trivial)
            fh.write(format_feature_line(entry.name, fs) + "\n")
