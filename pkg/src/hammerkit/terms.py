"""Polymorphic simply-typed lambda terms and their concrete syntax.

Statements are exchanged in a parenthesized prefix form that is trivial to
parse and print byte-stably:

    types   ::=  ident                      -- type variable (Upper...) or
                                               nullary constructor (lower...)
              |  '(' con type* ')'          -- compound type
    terms   ::=  '(' 'v' ident type ')'     -- variable
              |  '(' 'c' ident type ')'     -- constant
              |  '(' 'app' term term ')'
              |  '(' 'lam' '(' ident type ')' term ')'
              |  '(' B '(' ident type ')' term ')'   with B in ! ? \\

The binders `!` and `?` are sugar for applying the `forall` / `exists`
constants to an abstraction; `\\` is an alias for `lam`.  The arrow type is
the binary constructor `fun`; `bool` and `ind` are nullary.

All values here are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class HolError(Exception):
    """Base class for errors raised by this module."""


class HolParseError(HolError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class HolTypeError(HolError):
    pass


class SignatureError(HolError):
    pass


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class TyVar:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class TyApp:
    con: str
    args: tuple = ()

    def __repr__(self):
        if not self.args:
            return self.con
        return "(%s %s)" % (self.con, " ".join(map(repr, self.args)))


HolType = TyVar | TyApp

BOOL = TyApp("bool")
IND = TyApp("ind")


def mk_fun(dom: HolType, cod: HolType) -> TyApp:
    return TyApp("fun", (dom, cod))


def dest_fun(ty: HolType) -> tuple[HolType, HolType]:
    if isinstance(ty, TyApp) and ty.con == "fun" and len(ty.args) == 2:
        return ty.args[0], ty.args[1]
    raise HolTypeError(f"not a function type: {print_type(ty)}")


def is_fun(ty: HolType) -> bool:
    return isinstance(ty, TyApp) and ty.con == "fun" and len(ty.args) == 2


def arrow_spine(ty: HolType) -> tuple[list, HolType]:
    """Split a1 -> ... -> an -> r into ([a1..an], r)."""
    args = []
    while is_fun(ty):
        args.append(ty.args[0])
        ty = ty.args[1]
    return args, ty


def type_vars(ty: HolType, acc: list | None = None) -> list:
    """Type variable names in order of first occurrence."""
    if acc is None:
        acc = []
    if isinstance(ty, TyVar):
        if ty.name not in acc:
            acc.append(ty.name)
    else:
        for a in ty.args:
            type_vars(a, acc)
    return acc


def subst_type(ty: HolType, mapping: dict) -> HolType:
    if isinstance(ty, TyVar):
        return mapping.get(ty.name, ty)
    if not ty.args:
        return ty
    return TyApp(ty.con, tuple(subst_type(a, mapping) for a in ty.args))


def match_type(general: HolType, concrete: HolType, subst: dict | None = None) -> dict | None:
    """Match `general` against `concrete`, instantiating type variables of
    `general` only.  Returns the substitution or None."""
    if subst is None:
        subst = {}
    if isinstance(general, TyVar):
        bound = subst.get(general.name)
        if bound is None:
            subst[general.name] = concrete
            return subst
        return subst if bound == concrete else None
    if isinstance(concrete, TyVar):
        return None
    if general.con != concrete.con or len(general.args) != len(concrete.args):
        return None
    for g, c in zip(general.args, concrete.args):
        if match_type(g, c, subst) is None:
            return None
    return subst


def anti_unify(a: HolType, b: HolType, table: dict, fresh: list) -> HolType:
    """Least general generalization of two types (used to widen a declared
    constant type when a more general occurrence is seen in open mode)."""
    if isinstance(a, TyApp) and isinstance(b, TyApp) and a.con == b.con and len(a.args) == len(b.args):
        return TyApp(a.con, tuple(anti_unify(x, y, table, fresh) for x, y in zip(a.args, b.args)))
    if a == b:
        return a
    key = (a, b)
    if key not in table:
        table[key] = TyVar("G%d" % fresh[0])
        fresh[0] += 1
    return table[key]


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str
    ty: HolType

    def __repr__(self):
        return f"{self.name}:{self.ty!r}"


@dataclass(frozen=True)
class Const:
    name: str
    ty: HolType

    def __repr__(self):
        return f"`{self.name}`"


@dataclass(frozen=True)
class App:
    fun: "HolTerm"
    arg: "HolTerm"

    def __post_init__(self):
        fty = type_of(self.fun)
        if not is_fun(fty):
            raise HolTypeError(
                f"applying a non-function of type {print_type(fty)}")
        if fty.args[0] != type_of(self.arg):
            raise HolTypeError(
                "ill-typed application: expected %s, got %s"
                % (print_type(fty.args[0]), print_type(type_of(self.arg))))

    def __repr__(self):
        return f"({self.fun!r} {self.arg!r})"


@dataclass(frozen=True)
class Abs:
    var: Var
    body: "HolTerm"

    def __repr__(self):
        return f"(\\{self.var!r}. {self.body!r})"


HolTerm = Var | Const | App | Abs


def type_of(t: HolTerm) -> HolType:
    if isinstance(t, (Var, Const)):
        return t.ty
    if isinstance(t, Abs):
        return mk_fun(t.var.ty, type_of(t.body))
    ft = type_of(t.fun)
    return ft.args[1]


A_ = TyVar("A")

#: The logical constants, present in every signature.  `select` (the choice
#: operator) is carried syntactically only.
LOGICAL_CONSTANTS: dict = {
    "eq": mk_fun(A_, mk_fun(A_, BOOL)),
    "conj": mk_fun(BOOL, mk_fun(BOOL, BOOL)),
    "disj": mk_fun(BOOL, mk_fun(BOOL, BOOL)),
    "imp": mk_fun(BOOL, mk_fun(BOOL, BOOL)),
    "neg": mk_fun(BOOL, BOOL),
    "forall": mk_fun(mk_fun(A_, BOOL), BOOL),
    "exists": mk_fun(mk_fun(A_, BOOL), BOOL),
    "true": BOOL,
    "false": BOOL,
    "select": mk_fun(mk_fun(A_, BOOL), A_),
}

#: Logical constants pruned from feature sets unless trivial symbols are
#: requested.  Equality is deliberately not in this set.
FILTERED_LOGICAL = frozenset(
    ["conj", "disj", "imp", "neg", "forall", "exists", "true", "false", "select"])


def mk_const(name: str, at: HolType | None = None, subst: dict | None = None) -> Const:
    """A logical constant instantiated at a concrete type."""
    gen = LOGICAL_CONSTANTS[name]
    if subst is not None:
        return Const(name, subst_type(gen, subst))
    if at is None:
        return Const(name, gen)
    return Const(name, at)


def mk_eq(l: HolTerm, r: HolTerm) -> App:
    ty = type_of(l)
    return App(App(Const("eq", mk_fun(ty, mk_fun(ty, BOOL))), l), r)


def mk_binder(name: str, v: Var, body: HolTerm) -> App:
    q = Const(name, mk_fun(mk_fun(v.ty, BOOL), BOOL))
    return App(q, Abs(v, body))


def mk_forall(v: Var, body: HolTerm) -> App:
    return mk_binder("forall", v, body)


def mk_conj(l: HolTerm, r: HolTerm) -> App:
    return App(App(mk_const("conj"), l), r)


def mk_imp(l: HolTerm, r: HolTerm) -> App:
    return App(App(mk_const("imp"), l), r)


def strip_forall(t: HolTerm) -> tuple[list, HolTerm]:
    vs = []
    while (isinstance(t, App) and isinstance(t.fun, Const)
           and t.fun.name == "forall" and isinstance(t.arg, Abs)):
        vs.append(t.arg.var)
        t = t.arg.body
    return vs, t


def binder_split(t: HolTerm) -> tuple[str, Var, HolTerm] | None:
    """(kind, var, body) when t is forall/exists applied to an abstraction."""
    if (isinstance(t, App) and isinstance(t.fun, Const)
            and t.fun.name in ("forall", "exists") and isinstance(t.arg, Abs)):
        return t.fun.name, t.arg.var, t.arg.body
    return None


def app_spine(t: HolTerm) -> tuple[HolTerm, list]:
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def mk_apps(head: HolTerm, args) -> HolTerm:
    for a in args:
        head = App(head, a)
    return head


def free_vars(t: HolTerm, bound: frozenset = frozenset(), acc: list | None = None) -> list:
    """Free variables in order of first occurrence."""
    if acc is None:
        acc = []
    if isinstance(t, Var):
        if t not in bound and t not in acc:
            acc.append(t)
    elif isinstance(t, App):
        free_vars(t.fun, bound, acc)
        free_vars(t.arg, bound, acc)
    elif isinstance(t, Abs):
        free_vars(t.body, bound | {t.var}, acc)
    return acc


def all_var_names(t: HolTerm, acc: set | None = None) -> set:
    if acc is None:
        acc = set()
    if isinstance(t, Var):
        acc.add(t.name)
    elif isinstance(t, App):
        all_var_names(t.fun, acc)
        all_var_names(t.arg, acc)
    elif isinstance(t, Abs):
        acc.add(t.var.name)
        all_var_names(t.body, acc)
    return acc


def term_type_vars(t: HolTerm, acc: list | None = None) -> list:
    """Type variable names anywhere in the term, in first-occurrence order."""
    if acc is None:
        acc = []
    if isinstance(t, (Var, Const)):
        type_vars(t.ty, acc)
    elif isinstance(t, App):
        term_type_vars(t.fun, acc)
        term_type_vars(t.arg, acc)
    else:
        type_vars(t.var.ty, acc)
        term_type_vars(t.body, acc)
    return acc


def subst_term_types(t: HolTerm, mapping: dict) -> HolTerm:
    if isinstance(t, Var):
        return Var(t.name, subst_type(t.ty, mapping))
    if isinstance(t, Const):
        return Const(t.name, subst_type(t.ty, mapping))
    if isinstance(t, App):
        return App(subst_term_types(t.fun, mapping), subst_term_types(t.arg, mapping))
    return Abs(Var(t.var.name, subst_type(t.var.ty, mapping)),
               subst_term_types(t.body, mapping))


class _FreshNames:
    """Deterministic b0, b1, ... supply skipping a set of taken names."""

    def __init__(self, taken):
        self.taken = set(taken)
        self.n = 0

    def fresh(self) -> str:
        while True:
            name = "b%d" % self.n
            self.n += 1
            if name not in self.taken:
                self.taken.add(name)
                return name


def substitute(t: HolTerm, mapping: dict, fresh: _FreshNames) -> HolTerm:
    """Capture-avoiding substitution of Vars by terms."""
    if isinstance(t, Var):
        return mapping.get(t, t)
    if isinstance(t, Const):
        return t
    if isinstance(t, App):
        return App(substitute(t.fun, mapping, fresh),
                   substitute(t.arg, mapping, fresh))
    mapping = {v: r for v, r in mapping.items() if v != t.var}
    if not mapping:
        return t
    clash = any(t.var in free_vars(r) for r in mapping.values())
    var = t.var
    body = t.body
    if clash:
        var = Var(fresh.fresh(), t.var.ty)
        mapping = dict(mapping)
        mapping[t.var] = var
    return Abs(var, substitute(body, mapping, fresh))


def beta_normalize(t: HolTerm) -> HolTerm:
    """Reduce to beta-normal form.

    Terms without redexes are returned unchanged; names invented during
    reduction are drawn deterministically from b0, b1, ...  Termination is
    guaranteed by simple typing.
    """
    fresh = _FreshNames(all_var_names(t))

    def reduce(t: HolTerm) -> HolTerm:
        if isinstance(t, (Var, Const)):
            return t
        if isinstance(t, Abs):
            body = reduce(t.body)
            return t if body is t.body else Abs(t.var, body)
        fun = reduce(t.fun)
        arg = reduce(t.arg)
        if isinstance(fun, Abs):
            contracted = substitute(fun.body, {fun.var: arg}, fresh)
            return reduce(contracted)
        if fun is t.fun and arg is t.arg:
            return t
        return App(fun, arg)

    return reduce(t)


def alpha_equal(s: HolTerm, t: HolTerm) -> bool:
    # variables are (name, type) pairs; a binder only shadows that exact pair
    def go(s, t, env_s, env_t, depth):
        if isinstance(s, Var) and isinstance(t, Var):
            ds, dt = env_s.get(s), env_t.get(t)
            if ds is None and dt is None:
                return s == t
            return ds is not None and ds == dt and s.ty == t.ty
        if isinstance(s, Const) and isinstance(t, Const):
            return s == t
        if isinstance(s, App) and isinstance(t, App):
            return (go(s.fun, t.fun, env_s, env_t, depth)
                    and go(s.arg, t.arg, env_s, env_t, depth))
        if isinstance(s, Abs) and isinstance(t, Abs):
            if s.var.ty != t.var.ty:
                return False
            es = dict(env_s)
            et = dict(env_t)
            es[s.var] = depth
            et[t.var] = depth
            return go(s.body, t.body, es, et, depth + 1)
        return False

    return go(s, t, {}, {}, 0)


# ---------------------------------------------------------------------------
# Signature


@dataclass
class Signature:
    """Type constructor arities, constant declarations, and overloads.

    In open mode the first occurrence of a constructor or constant declares
    it; sealed signatures reject anything undeclared.  Overload entries map a
    surface name at a declared type to a unique export name, so that parsed
    constants always resolve to exactly one underlying constant.
    """

    open: bool = True
    tycons: dict = field(default_factory=lambda: {"fun": 2, "bool": 0, "ind": 0})
    consts: dict = field(default_factory=dict)
    # surface name -> list of (declared general type, export name)
    overloads: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, ty in LOGICAL_CONSTANTS.items():
            self.consts.setdefault(name, ty)

    def seal(self):
        self.open = False

    def declare_tycon(self, name: str, arity: int):
        known = self.tycons.get(name)
        if known is None:
            self.tycons[name] = arity
        elif known != arity:
            raise SignatureError(
                f"type constructor {name} used with arity {arity}, declared {known}")

    def declare_const(self, name: str, ty: HolType):
        if name in self.consts and self.consts[name] != ty:
            raise SignatureError(f"constant {name} already declared")
        self.consts[name] = ty

    def declare_overload(self, surface: str, export: str, ty: HolType):
        entries = self.overloads.setdefault(surface, [])
        for gty, exp in entries:
            if exp == export:
                raise SignatureError(f"duplicate overload {surface} -> {export}")
        for exps in self.overloads.values():
            for _, exp in exps:
                if exp == export:
                    raise SignatureError(f"export name {export} not injective")
        entries.append((ty, export))
        self.declare_const(export, ty)

    def resolve_const(self, surface: str, occ_ty: HolType) -> str:
        """Export name for a constant occurrence; registers it in open mode."""
        entries = self.overloads.get(surface, [])
        hits = [exp for gty, exp in entries if match_type(gty, occ_ty, {}) is not None]
        if len(hits) > 1:
            raise SignatureError(f"ambiguous overloaded constant {surface}")
        if hits:
            return hits[0]
        declared = self.consts.get(surface)
        if declared is None:
            if not self.open:
                raise SignatureError(f"unknown constant {surface}")
            self.consts[surface] = occ_ty
            return surface
        if match_type(declared, occ_ty, {}) is not None:
            return surface
        if self.open:
            # widen the declaration: the new occurrence may be more general
            if match_type(occ_ty, declared, {}) is not None:
                self.consts[surface] = occ_ty
            else:
                self.consts[surface] = anti_unify(declared, occ_ty, {}, [0])
            return surface
        raise HolTypeError(
            "constant %s at %s is not an instance of its declared type %s"
            % (surface, print_type(occ_ty), print_type(declared)))

    def check_type(self, ty: HolType, register: bool = False):
        if isinstance(ty, TyVar):
            return
        if register and self.open:
            self.declare_tycon(ty.con, len(ty.args))
        else:
            known = self.tycons.get(ty.con)
            if known is None:
                if not self.open:
                    raise SignatureError(f"unknown type constructor {ty.con}")
                self.declare_tycon(ty.con, len(ty.args))
            elif known != len(ty.args):
                raise SignatureError(
                    f"type constructor {ty.con} used with arity {len(ty.args)}, declared {known}")
        for a in ty.args:
            self.check_type(a, register)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(r"[()]|[^\s()]+")
_IDENT = re.compile(r"[^\s()]+\Z")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.toks = [(m.group(0), m.start()) for m in _TOKEN.finditer(text)]
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, len(self.text))

    def next(self):
        tok, pos = self.peek()
        if tok is None:
            raise HolParseError("unexpected end of input", pos)
        self.i += 1
        return tok, pos

    def expect(self, what: str):
        tok, pos = self.next()
        if tok != what:
            raise HolParseError(f"expected {what!r}, got {tok!r}", pos)
        return pos

    def done(self):
        tok, pos = self.peek()
        if tok is not None:
            raise HolParseError(f"trailing input {tok!r}", pos)


def _is_tyvar_name(name: str) -> bool:
    return name[0].isupper()


def _parse_type(toks: _Tokens, sig: Signature) -> HolType:
    tok, pos = toks.next()
    if tok == ")":
        raise HolParseError("unexpected ')'", pos)
    if tok != "(":
        if _is_tyvar_name(tok):
            return TyVar(tok)
        ty = TyApp(tok)
        sig.check_type(ty)
        return ty
    con, cpos = toks.next()
    if con in ("(", ")"):
        raise HolParseError("expected a type constructor name", cpos)
    if _is_tyvar_name(con):
        raise HolParseError(f"type variable {con} cannot take arguments", cpos)
    args = []
    while True:
        tok, pos = toks.peek()
        if tok is None:
            raise HolParseError("unclosed type", pos)
        if tok == ")":
            toks.next()
            break
        args.append(_parse_type(toks, sig))
    ty = TyApp(con, tuple(args))
    sig.check_type(ty)
    return ty


def parse_type(text: str, sig: Signature) -> HolType:
    toks = _Tokens(text)
    ty = _parse_type(toks, sig)
    toks.done()
    return ty


_BINDERS = {"!": "forall", "?": "exists"}


def _parse_binding(toks: _Tokens, sig: Signature) -> Var:
    toks.expect("(")
    name, pos = toks.next()
    if name in ("(", ")"):
        raise HolParseError("expected a variable name", pos)
    ty = _parse_type(toks, sig)
    toks.expect(")")
    return Var(name, ty)


def _parse_term(toks: _Tokens, sig: Signature) -> HolTerm:
    opos = toks.expect("(")
    head, hpos = toks.next()
    if head == "v":
        name, pos = toks.next()
        ty = _parse_type(toks, sig)
        toks.expect(")")
        return Var(name, ty)
    if head == "c":
        name, pos = toks.next()
        ty = _parse_type(toks, sig)
        toks.expect(")")
        export = sig.resolve_const(name, ty)
        return Const(export, ty)
    if head == "app":
        f = _parse_term(toks, sig)
        x = _parse_term(toks, sig)
        toks.expect(")")
        try:
            return App(f, x)
        except HolTypeError as e:
            raise HolTypeError(f"{e} (application at position {opos})") from None
    if head in ("lam", "\\"):
        v = _parse_binding(toks, sig)
        body = _parse_term(toks, sig)
        toks.expect(")")
        return Abs(v, body)
    if head in _BINDERS:
        v = _parse_binding(toks, sig)
        body = _parse_term(toks, sig)
        toks.expect(")")
        if type_of(body) != BOOL:
            raise HolTypeError(
                f"binder {head} body must be bool, got {print_type(type_of(body))}")
        return mk_binder(_BINDERS[head], v, body)
    raise HolParseError(f"unknown term head {head!r}", hpos)


def parse_term(text: str, sig: Signature) -> HolTerm:
    toks = _Tokens(text)
    t = _parse_term(toks, sig)
    toks.done()
    return t


# ---------------------------------------------------------------------------
# Printing


def print_type(ty: HolType) -> str:
    if isinstance(ty, TyVar):
        return ty.name
    if not ty.args:
        return ty.con
    return "(%s %s)" % (ty.con, " ".join(print_type(a) for a in ty.args))


def print_term(t: HolTerm) -> str:
    """Canonical printer: explicit prefix form, single spaces, bound
    variables renamed b0, b1, ... in binder order."""
    fresh = _FreshNames(
        v.name for v in free_vars(t))

    def go(t, env):
        if isinstance(t, Var):
            return "(v %s %s)" % (env.get(t, t.name), print_type(t.ty))
        if isinstance(t, Const):
            return "(c %s %s)" % (t.name, print_type(t.ty))
        if isinstance(t, App):
            return "(app %s %s)" % (go(t.fun, env), go(t.arg, env))
        name = fresh.fresh()
        env2 = dict(env)
        env2[t.var] = name
        return "(lam (%s %s) %s)" % (name, print_type(t.var.ty), go(t.body, env2))

    return go(t, {})
