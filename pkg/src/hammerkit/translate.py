"""Translation of goal + premises into FOF, TFF1 and THF TPTP problems.

The first-order pipeline is: beta-normalize (caller's precondition), lambda
lifting, minimum-arity application analysis, then rendering.  Application
wrapping happens at rendering time: a constant is applied directly to its
minimum observed arity and any surplus arguments go through the binary
apply functor (printed ``i``), as do all applications of function-typed
variables.  FOF output tags every term with its type through the ``s``
functor and mediates the boolean-term/formula boundary through the reserved
predicate ``p``; TFF1 instead declares symbols and makes implicit type
variables explicit.  The THF route performs only monomorphisation: premise
instances are created by matching their polymorphic constants against the
constants extracted once from the goal.

Lifted combinator definitions run through the same pipeline as ordinary
premises (tagging and application analysis included).

Name mangling matches the printed style of the corpus this follows:
``_`` becomes ``u_`` (other non-alphanumerics become ``u<hex>_``), axiom
labels get an ``a`` prefix, declaration labels ``c``/``t``, constants are
lowercased.  Everything here is a pure function over immutable inputs, so a
batch generator may translate many problems concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .terms import (
    BOOL, Abs, App, Const, HolError, HolTerm, HolType, TyApp, TyVar, Var,
    anti_unify, app_spine, arrow_spine, binder_split, dest_fun, free_vars,
    is_fun, match_type, mk_apps, mk_binder, mk_const, mk_eq, mk_forall,
    print_type, subst_term_types, subst_type, term_type_vars, type_of,
    type_vars,
)

FORMATS = ("fof", "tff1", "thf")


class NotFirstOrder(HolError):
    """A boolean structure survived that the translation cannot mediate;
    this signals a translator bug, not a user error."""


class TranslateError(HolError):
    pass


# ---------------------------------------------------------------------------
# Name mangling


def mangle(name: str) -> str:
    out = []
    for ch in name:
        if ch == "_":
            out.append("u_")
        elif ch.isalnum():
            out.append(ch)
        else:
            out.append("u%x_" % ord(ch))
    return "".join(out)


def axiom_label(name: str) -> str:
    return "a" + mangle(name)


#: fixed export names for the logical constants at term positions
LOGICAL_SYMBOLS = {
    "eq": "eq", "conj": "and", "disj": "or", "imp": "imp", "neg": "not",
    "forall": "all", "exists": "ex", "true": "t", "false": "f",
    "select": "sel",
}

#: declaration-label names for logical constants (the true/false constants
#: are declared under their classical single-letter names)
LOGICAL_DECL_NAMES = {"true": "T", "false": "F"}

_RESERVED = {"s", "p", "i", "fn", "fun"} | set(LOGICAL_SYMBOLS.values())

_STRUCTURAL_HEADS = ("conj", "disj", "imp", "neg", "forall", "exists", "eq")

_BIN_OPS = {"conj": "&", "disj": "|", "imp": "=>"}


def _fresh_symbol(candidate: str, taken: set) -> str:
    name = candidate
    n = 0
    while name in taken:
        n += 1
        name = "%s_c%d" % (candidate, n)
    taken.add(name)
    return name


def var_symbol(name: str) -> str:
    m = mangle(name)
    return m[0].upper() + m[1:]


# ---------------------------------------------------------------------------
# Formula shape analysis shared by scanning and rendering


def formula_shaped(t: HolTerm) -> bool:
    head, args = app_spine(t)
    if not isinstance(head, Const):
        return False
    n = head.name
    if n in ("conj", "disj", "imp") and len(args) == 2:
        return True
    if n == "neg" and len(args) == 1:
        return True
    if n == "eq" and len(args) == 2:
        return True
    if n in ("forall", "exists") and len(args) == 1 and isinstance(args[0], Abs):
        return True
    return False


def _eq_as_iff(args) -> bool:
    return type_of(args[0]) == BOOL and (
        formula_shaped(args[0]) or formula_shaped(args[1]))


def _structural(t: HolTerm):
    """(kind, args) when t is translated as formula structure, else None."""
    head, args = app_spine(t)
    if not isinstance(head, Const) or head.name not in _STRUCTURAL_HEADS:
        return None
    n = head.name
    if n in ("conj", "disj", "imp") and len(args) == 2:
        return n, args
    if n == "neg" and len(args) == 1:
        return n, args
    if n == "eq" and len(args) == 2:
        return ("iff" if _eq_as_iff(args) else "eq"), args
    if n in ("forall", "exists") and len(args) == 1 and isinstance(args[0], Abs):
        return n, args
    return None


# ---------------------------------------------------------------------------
# Lambda lifting


def lambda_lift(goal: HolTerm, premises):
    """Remove abstractions not directly under a quantifier on the formula
    skeleton.  Each lifted lambda becomes a fresh combinator constant,
    applied to the free variables of the abstraction, with a universally
    quantified defining equation.  Returns (goal', premises', defs) where
    defs is a list of (definition name, combinator name, equation)."""
    taken = set()
    for t in [goal] + [p for _, p in premises]:
        collect_const_names(t, taken)
    defs = []
    counter = [0]

    def fresh_const_name():
        while True:
            name = "lift%d" % counter[0]
            counter[0] += 1
            if name not in taken:
                taken.add(name)
                return name

    def lift(t, fpos):
        if isinstance(t, (Var, Const)):
            return t
        if fpos:
            st = _structural(t)
            if st is not None:
                kind, args = st
                head = app_spine(t)[0]
                if kind in ("forall", "exists"):
                    ab = args[0]
                    return mk_binder(kind, ab.var, lift(ab.body, True))
                if kind in ("conj", "disj", "imp", "neg"):
                    return mk_apps(head, [lift(a, True) for a in args])
                if kind == "iff":
                    return mk_apps(head, [lift(a, True) for a in args])
                return mk_apps(head, [lift(a, False) for a in args])
        if isinstance(t, Abs):
            binders = []
            body = t
            while isinstance(body, Abs):
                binders.append(body.var)
                body = body.body
            body = lift(body, type_of(body) == BOOL)
            fvs = [v for v in free_vars(t)]
            name = fresh_const_name()
            ty = type_of(body)
            for v in reversed(binders):
                ty = TyApp("fun", (v.ty, ty))
            for v in reversed(fvs):
                ty = TyApp("fun", (v.ty, ty))
            combinator = Const(name, ty)
            lhs = mk_apps(combinator, fvs + binders)
            equation = mk_eq(lhs, body)
            for v in reversed(fvs + binders):
                equation = mk_forall(v, equation)
            defs.append((name + "_def", name, equation))
            return mk_apps(combinator, fvs)
        return App(lift(t.fun, False), lift(t.arg, False))

    goal2 = lift(goal, True)
    premises2 = [(n, lift(p, True)) for n, p in premises]
    return goal2, premises2, defs


def collect_const_names(t: HolTerm, acc: set) -> set:
    if isinstance(t, Const):
        acc.add(t.name)
    elif isinstance(t, App):
        collect_const_names(t.fun, acc)
        collect_const_names(t.arg, acc)
    elif isinstance(t, Abs):
        collect_const_names(t.body, acc)
    return acc


# ---------------------------------------------------------------------------
# Minimum-arity analysis


def compute_min_arities(formulas) -> dict:
    """Minimum applied arity of every constant at term positions across the
    problem, mirroring the translation's formula/term distinction."""
    arities: dict = {}
    occtypes: dict = {}

    def note(c: Const, nargs: int):
        have = arities.get(c.name)
        arities[c.name] = nargs if have is None else min(have, nargs)
        occtypes.setdefault(c.name, []).append(c.ty)

    def formula(t):
        st = _structural(t)
        if st is not None:
            kind, args = st
            if kind in ("forall", "exists"):
                formula(args[0].body)
                return
            if kind in ("conj", "disj", "imp", "neg", "iff"):
                for a in args:
                    formula(a)
                return
            for a in args:
                term(a)
            return
        term(t)

    def term(t):
        if isinstance(t, Var):
            return
        if isinstance(t, Const):
            note(t, 0)
            return
        if isinstance(t, Abs):
            term(t.body)
            return
        head, args = app_spine(t)
        if isinstance(head, Const):
            note(head, len(args))
        else:
            term(head)
        for a in args:
            term(a)

    for f in formulas:
        formula(f)
    return arities, occtypes


# ---------------------------------------------------------------------------
# Formula IR


@dataclass
class FQuant:
    kind: str  # "!" or "?"
    binders: list  # (name, type-text or None)
    body: object


@dataclass
class FBin:
    op: str  # & | => <=>
    left: object
    right: object


@dataclass
class FNeg:
    body: object


@dataclass
class FEq:
    left: str
    right: str


@dataclass
class FAtom:
    text: str  # already rendered, including the p(...) wrapper


def serialize_formula(f) -> str:
    if isinstance(f, FQuant):
        names = ",".join(
            n if ty is None else "%s:%s" % (n, ty) for n, ty in f.binders)
        return "%s[%s]: %s" % (f.kind, names, serialize_formula(f.body))
    if isinstance(f, FBin):
        parts = []
        def flatten(g):
            if isinstance(g, FBin) and g.op == f.op and f.op in ("&", "|"):
                flatten(g.left)
                flatten(g.right)
            else:
                parts.append(serialize_formula(g))
        flatten(f.left)
        flatten(f.right)
        return "(%s)" % ((" %s " % f.op).join(parts))
    if isinstance(f, FNeg):
        return "~ (%s)" % serialize_formula(f.body)
    if isinstance(f, FEq):
        return "%s = %s" % (f.left, f.right)
    return f.text


# ---------------------------------------------------------------------------
# Problem container


@dataclass
class FoProblem:
    format: str
    type_decls: list = field(default_factory=list)
    axioms: list = field(default_factory=list)  # (label, text)
    conjecture: tuple = ("conjecture", "")
    premise_names: dict = field(default_factory=dict)  # label -> source name
    goal_name: str = ""

    def keyword(self) -> str:
        return {"fof": "fof", "tff1": "tff", "thf": "thf"}[self.format]

    def formula_lines(self) -> list:
        kw = self.keyword()
        lines = ["%s(%s, axiom, %s)." % (kw, label, text)
                 for label, text in self.axioms]
        lines.append("%s(%s, conjecture, %s)." % (
            kw, self.conjecture[0], self.conjecture[1]))
        return lines

    def serialize(self) -> str:
        lines = []
        if self.goal_name:
            lines.append("% problem: " + self.goal_name)
        for label, source in sorted(self.premise_names.items()):
            lines.append("%% hammerkit_premise %s %s" % (label, source))
        lines.extend(self.type_decls)
        lines.extend(self.formula_lines())
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Helper axioms (functional extensionality plus the boolean facts)


def standard_helper_axioms():
    a, b = TyVar("A"), TyVar("B")
    fab = TyApp("fun", (a, b))
    f, g, x = Var("f", fab), Var("g", fab), Var("x", a)
    eq_ext = mk_forall(f, mk_forall(g, mk_apps(
        mk_const("imp"),
        [mk_forall(x, mk_eq(App(f, x), App(g, x))), mk_eq(f, g)])))
    t = Var("t", BOOL)
    bool_cases = mk_forall(t, mk_apps(
        mk_const("disj"),
        [mk_eq(t, mk_const("true")), mk_eq(t, mk_const("false"))]))
    not_weak = mk_eq(App(mk_const("neg"), mk_const("false")), mk_const("true"))
    truth = mk_const("true")
    return [
        ("EQ_EXT", eq_ext),
        ("BOOL_CASES_AX", bool_cases),
        ("NOT_CLAUSES_WEAK_conjunct1", not_weak),
        ("TRUTH", truth),
    ]


HELPER_NAMES = ("EQ_EXT", "BOOL_CASES_AX", "NOT_CLAUSES_WEAK_conjunct1", "TRUTH")


# ---------------------------------------------------------------------------
# First-order rendering (FOF and TFF1)


class _FirstOrderRenderer:
    def __init__(self, fmt: str, arities: dict, occtypes: dict, tycon_arity: dict):
        self.fmt = fmt
        self.arities = arities
        self.tycon_arity = tycon_arity
        self.symbols: dict = {}          # const name -> FO symbol
        self.decl_info: dict = {}        # const name -> (general ty, tyvars)
        self.tycon_symbols: dict = {}
        self.used_tycons: list = []      # in first-use order
        self.used_consts: list = []      # const names in first-use order
        taken = set(_RESERVED)
        for name in occtypes:
            base = LOGICAL_SYMBOLS.get(name) or mangle(name).lower()
            if name in LOGICAL_SYMBOLS:
                self.symbols[name] = base
                taken.add(base)
            else:
                self.symbols[name] = _fresh_symbol(base, taken)
        for name, tys in occtypes.items():
            # in-problem most-general type: fold of pairwise anti-unification,
            # re-canonicalized each step so fresh names never collide
            general = tys[0]
            for ty in tys[1:]:
                general = anti_unify(general, ty, {}, [0])
                tvs = type_vars(general)
                general = subst_type(
                    general, {v: TyVar("H%d" % i) for i, v in enumerate(tvs)})
            tvs = type_vars(general)
            canonical = {v: TyVar(_decl_tyvar(i)) for i, v in enumerate(tvs)}
            general = subst_type(general, canonical)
            self.decl_info[name] = (general, type_vars(general))

    # -- types --------------------------------------------------------------

    def tycon(self, con: str) -> str:
        sym = self.tycon_symbols.get(con)
        if sym is None:
            if con == "fun":
                sym = "fun" if self.fmt == "fof" else "fn"
            else:
                sym = mangle(con).lower()
                if sym in _RESERVED or sym in self.tycon_symbols.values():
                    sym = _fresh_symbol(sym, set(_RESERVED) | set(self.tycon_symbols.values()))
            self.tycon_symbols[con] = sym
            self.used_tycons.append(con)
        return sym

    def fo_type(self, ty: HolType) -> str:
        if isinstance(ty, TyVar):
            return var_symbol(ty.name)
        sym = self.tycon(ty.con)
        if not ty.args:
            return sym
        return "%s(%s)" % (sym, ",".join(self.fo_type(a) for a in ty.args))

    # -- terms --------------------------------------------------------------

    def tagged(self, t: HolTerm, env: dict) -> str:
        return "s(%s,%s)" % (self.fo_type(type_of(t)), self.core(t, env))

    def term(self, t: HolTerm, env: dict) -> str:
        """One term occurrence: tagged in FOF, plain in TFF1."""
        return self.tagged(t, env) if self.fmt == "fof" else self.core(t, env)

    def _note_const(self, name: str):
        if name not in self.used_consts:
            self.used_consts.append(name)

    def core(self, t: HolTerm, env: dict) -> str:
        if isinstance(t, Var):
            return env[t]
        if isinstance(t, Abs):
            raise NotFirstOrder(
                "an abstraction survived lambda lifting at a term position")
        head, args = app_spine(t)
        if isinstance(head, Const):
            self._note_const(head.name)
            n = self.arities.get(head.name, 0)
            sym = self.symbols[head.name]
            call_args = []
            if self.fmt == "tff1":
                general, tvs = self.decl_info[head.name]
                if tvs:
                    subst = match_type(general, head.ty, {})
                    if subst is None:
                        raise TranslateError(
                            f"occurrence of {head.name} does not match its "
                            "in-problem general type")
                    call_args += [self.fo_type(subst[v]) for v in tvs]
            call_args += [self.term(a, env) for a in args[:n]]
            core = sym if not call_args else "%s(%s)" % (sym, ",".join(call_args))
            cur_ty = head.ty
            for _ in range(n):
                cur_ty = dest_fun(cur_ty)[1]
            rest = args[n:]
        else:
            core = self.core(head, env)
            cur_ty = type_of(head)
            rest = args
        for a in rest:
            dom, cod = dest_fun(cur_ty)
            if self.fmt == "fof":
                core = "i(s(%s,%s),%s)" % (self.fo_type(cur_ty), core, self.term(a, env))
            else:
                core = "i(%s,%s,%s,%s)" % (
                    self.fo_type(dom), self.fo_type(cod), core, self.term(a, env))
            cur_ty = cod
        return core

    # -- formulas -----------------------------------------------------------

    def formula(self, t: HolTerm, env: dict, scope: set):
        st = _structural(t)
        if st is None:
            if type_of(t) != BOOL:
                raise NotFirstOrder(
                    "non-boolean term at formula position: %r" % (t,))
            return FAtom("p(%s)" % self.term(t, env))
        kind, args = st
        if kind in _BIN_OPS:
            return FBin(_BIN_OPS[kind],
                        self.formula(args[0], env, scope),
                        self.formula(args[1], env, scope))
        if kind == "neg":
            return FNeg(self.formula(args[0], env, scope))
        if kind == "iff":
            return FBin("<=>",
                        self.formula(args[0], env, scope),
                        self.formula(args[1], env, scope))
        if kind == "eq":
            return FEq(self.term(args[0], env), self.term(args[1], env))
        # quantifier: collapse consecutive binders of the same kind
        binders = []
        env = dict(env)
        scope = set(scope)
        body = t
        while True:
            bs = binder_split(body)
            if bs is None or bs[0] != kind:
                break
            _, v, body = bs
            name = _fresh_symbol(var_symbol(v.name), scope)
            env[v] = name
            tytext = self.fo_type(v.ty) if self.fmt == "tff1" else None
            binders.append((name, tytext))
        return FQuant("!" if kind == "forall" else "?", binders,
                      self.formula(body, env, scope))

    def render(self, t: HolTerm) -> str:
        tvs = term_type_vars(t)
        scope = {var_symbol(v) for v in tvs}
        env = {}
        for v in free_vars(t):
            env[v] = _fresh_symbol(var_symbol(v.name), scope)
        body = self.formula(t, env, scope)
        if tvs:
            tytext = "$tType" if self.fmt == "tff1" else None
            body = FQuant("!", [(var_symbol(v), tytext) for v in tvs], body)
        return serialize_formula(body)

    # -- declarations (TFF1 only) --------------------------------------------

    def type_declarations(self) -> list:
        decls = []
        for con in sorted(self.used_tycons, key=lambda c: self.tycon_symbols[c]):
            sym = self.tycon_symbols[con]
            arity = self.tycon_arity.get(con, 2 if con == "fun" else 0)
            if arity == 0:
                kind = "$tType"
            else:
                kind = "(%s) > $tType" % " * ".join(["$tType"] * arity)
            decls.append("tff(t%s, type, %s:%s)." % (mangle(con), sym, kind))
        decls.append("tff(cp, type, p:(bool > $o)).")
        decls.append(
            "tff(chapp, type, i:!>[A:$tType,B:$tType]: ((fn(A,B) * A) > B)).")
        for name in sorted(self.used_consts, key=lambda n: self.symbols[n]):
            sym = self.symbols[name]
            general, tvs = self.decl_info[name]
            n = self.arities.get(name, 0)
            spine, _ = arrow_spine(general)
            n = min(n, len(spine))
            args = []
            cur = general
            for _ in range(n):
                d, cur = dest_fun(cur)
                args.append(self.fo_type(d))
            if not args:
                tytext = self.fo_type(cur)
            elif len(args) == 1:
                tytext = "(%s > %s)" % (args[0], self.fo_type(cur))
            else:
                tytext = "((%s) > %s)" % (" * ".join(args), self.fo_type(cur))
            if tvs:
                block = ",".join("%s:$tType" % var_symbol(v) for v in tvs)
                tytext = "!>[%s]: %s" % (block, tytext)
            decl_name = LOGICAL_DECL_NAMES.get(name, name if name not in LOGICAL_SYMBOLS else sym)
            decls.append("tff(c%s, type, %s:%s)." % (mangle(decl_name), sym, tytext))
        return decls


def _decl_tyvar(i: int) -> str:
    letters = "ABCDEFGHJKLMNPQRSTUVWXYZ"
    return letters[i] if i < len(letters) else "TV%d" % i


# ---------------------------------------------------------------------------
# FOF / TFF1 export


def _assemble_axioms(premises, defs):
    """EQ_EXT pinned first, everything else sorted by source name; premises
    that duplicate a helper are dropped."""
    helpers = standard_helper_axioms()
    named = {}
    for name, t in helpers:
        named[name] = t
    for name, t in premises:
        if name not in named:
            named[name] = t
    for defname, _, equation in defs:
        named.setdefault(defname, equation)
    ordered = [("EQ_EXT", named.pop("EQ_EXT"))]
    ordered += sorted(named.items())
    return ordered


def _export_first_order(fmt, goal, premises, defs, goal_name="goal"):
    axioms = _assemble_axioms(premises, defs)
    formulas = [t for _, t in axioms] + [goal]
    arities, occtypes = compute_min_arities(formulas)
    tycon_arity = {}
    for t in formulas:
        _collect_tycon_arities(t, tycon_arity)
    renderer = _FirstOrderRenderer(fmt, arities, occtypes, tycon_arity)
    problem = FoProblem(format=fmt, goal_name=goal_name)
    premise_set = {n for n, _ in premises}
    for name, t in axioms:
        label = axiom_label(name)
        problem.axioms.append((label, renderer.render(t)))
        if name in premise_set:
            problem.premise_names[label] = name
    problem.conjecture = ("conjecture", renderer.render(goal))
    if fmt == "tff1":
        problem.type_decls = renderer.type_declarations()
    return problem


def _collect_tycon_arities(t: HolTerm, acc: dict):
    def ty(x):
        if isinstance(x, TyApp):
            acc[x.con] = len(x.args)
            for a in x.args:
                ty(a)
    if isinstance(t, (Var, Const)):
        ty(t.ty)
    elif isinstance(t, App):
        _collect_tycon_arities(t.fun, acc)
        _collect_tycon_arities(t.arg, acc)
    else:
        ty(t.var.ty)
        _collect_tycon_arities(t.body, acc)


def export_fof(goal, premises, defs, goal_name="goal") -> FoProblem:
    """Lifted, beta-normalized input -> FOF problem with type tagging."""
    return _export_first_order("fof", goal, premises, defs, goal_name)


def export_tff1(goal, premises, defs, goal_name="goal") -> FoProblem:
    """Lifted, beta-normalized input -> TFF1 problem with declarations."""
    return _export_first_order("tff1", goal, premises, defs, goal_name)


# ---------------------------------------------------------------------------
# Monomorphisation and THF export

#: logical constants never participate in instance matching; they are
#: rendered natively in THF (select is the exception, it has no native form)
_THF_NATIVE = set(LOGICAL_SYMBOLS) - {"select"}

THF_INSTANCE_CAP = 4


@dataclass
class MonoResult:
    goal: HolTerm
    goal_name: str
    instances: list          # (source name, serial, ground premise)
    instance_names: dict     # (const name, ground type) -> THF symbol
    frozen_tyvars: dict      # goal type variable -> ground type


def _const_occurrences(t: HolTerm, acc: list):
    if isinstance(t, Const):
        if t.name not in _THF_NATIVE and (t.name, t.ty) not in acc:
            acc.append((t.name, t.ty))
    elif isinstance(t, App):
        _const_occurrences(t.fun, acc)
        _const_occurrences(t.arg, acc)
    elif isinstance(t, Abs):
        _const_occurrences(t.body, acc)
    return acc


def monomorphise(goal: HolTerm, premises, goal_name="goal",
                 cap: int = THF_INSTANCE_CAP) -> MonoResult:
    """Instantiate premises at the constant types extracted once from the
    goal.  Premises never enlarge the instantiating set; the procedure is
    linear in the number of premises.  Instances with residual type
    variables are dropped; at most ``cap`` instances per premise are kept,
    in type-lexicographic order."""
    # freeze the goal's type variables at fresh ground types
    frozen = {}
    used_cons = set()
    for t in [goal] + [p for _, p in premises]:
        _collect_tycon_arities(t, d := {})
        used_cons |= set(d)
    for tv in term_type_vars(goal):
        base = mangle(tv).lower()
        name = base
        n = 0
        while name in used_cons:
            n += 1
            name = "%s%d" % (base, n)
        used_cons.add(name)
        frozen[tv] = TyApp(name)
    ground_goal = subst_term_types(goal, frozen) if frozen else goal

    goal_instances: dict = {}
    for cname, cty in _const_occurrences(ground_goal, []):
        goal_instances.setdefault(cname, []).append(cty)

    instances = []
    for pname, prem in premises:
        tvs = term_type_vars(prem)
        if not tvs:
            instances.append((pname, [prem]))
            continue
        substs = [{}]
        for cname, cty in _const_occurrences(prem, []):
            if not type_vars(cty):
                continue
            targets = sorted(goal_instances.get(cname, []), key=print_type)
            if not targets:
                continue
            extended = []
            for sub in substs:
                partial = subst_type(cty, sub)
                for gty in targets:
                    more = match_type(partial, gty, {})
                    if more is not None:
                        merged = dict(sub)
                        merged.update(more)
                        if merged not in extended:
                            extended.append(merged)
            if extended:
                substs = extended
        grounded = []
        for sub in substs:
            if all(tv in sub and not type_vars(sub[tv]) for tv in tvs):
                key = tuple(print_type(sub[tv]) for tv in tvs)
                grounded.append((key, sub))
        grounded.sort(key=lambda ks: ks[0])
        seen = set()
        insts = []
        for key, sub in grounded:
            if key in seen:
                continue
            seen.add(key)
            insts.append(subst_term_types(prem, sub))
            if len(insts) >= cap:
                break
        if insts:
            instances.append((pname, insts))

    # register every (constant, ground type) pair and assign instance names
    registry: dict = {}
    def register(t):
        for cname, cty in _const_occurrences(t, []):
            registry.setdefault(cname, set()).add(cty)
    register(ground_goal)
    for _, insts in instances:
        for inst in insts:
            register(inst)

    # THF has no tagging or apply functor, so none of the first-order
    # reserved symbols apply; only type-atom names must be avoided
    names: dict = {}
    taken = {mangle(c).lower() for c in used_cons}
    for cname in sorted(registry):
        tys = sorted(registry[cname], key=print_type)
        base = LOGICAL_SYMBOLS.get(cname) or mangle(cname).lower()
        for idx, ty in enumerate(tys):
            if idx == len(tys) - 1:
                candidate = base
            else:
                candidate = "%s%d" % (base, idx)
            names[(cname, ty)] = _fresh_symbol(candidate, taken)

    flat = []
    for pname, insts in instances:
        for serial, inst in enumerate(insts):
            flat.append((pname, serial, inst))
    return MonoResult(ground_goal, goal_name, flat, names, frozen)


class _ThfRenderer:
    def __init__(self, instance_names: dict):
        self.instance_names = instance_names
        self.atom_types: dict = {}  # atomic THF type name -> source type

    def thf_atom(self, ty: TyApp) -> str:
        if not ty.args:
            name = mangle(ty.con).lower()
        else:
            name = "_".join([mangle(ty.con).lower()] +
                            [self.thf_atom_nested(a) for a in ty.args])
        self.atom_types[name] = ty
        return name

    def thf_atom_nested(self, ty: HolType) -> str:
        if isinstance(ty, TyVar):
            raise TranslateError("residual type variable in THF type")
        if not ty.args:
            return mangle(ty.con).lower()
        return "_".join([mangle(ty.con).lower()] +
                        [self.thf_atom_nested(a) for a in ty.args])

    def thf_type(self, ty: HolType) -> str:
        if isinstance(ty, TyVar):
            raise TranslateError("residual type variable in THF type")
        if is_fun(ty):
            return "(%s > %s)" % (self.thf_type(ty.args[0]), self.thf_type(ty.args[1]))
        return self.thf_atom(ty)

    def expr(self, t: HolTerm, env: dict) -> str:
        st = _structural(t)
        if st is not None:
            kind, args = st
            if kind in _BIN_OPS:
                return "(%s %s %s)" % (self.expr(args[0], env),
                                       _BIN_OPS[kind], self.expr(args[1], env))
            if kind == "iff":
                return "(%s <=> %s)" % (self.expr(args[0], env), self.expr(args[1], env))
            if kind == "neg":
                return "(~ %s)" % self.expr(args[0], env)
            if kind == "eq":
                return "%s = %s" % (self.expr(args[0], env), self.expr(args[1], env))
            ab = args[0]
            q = "!" if kind == "forall" else "?"
            name = _fresh_symbol(var_symbol(ab.var.name), set(env.values()))
            env2 = dict(env)
            env2[ab.var] = name
            return "%s[%s:%s]:(%s)" % (q, name, self.thf_type(ab.var.ty),
                                       self.expr(ab.body, env2))
        if isinstance(t, Var):
            return env[t]
        if isinstance(t, Const):
            if t.name == "true":
                return "$true"
            if t.name == "false":
                return "$false"
            sym = self.instance_names.get((t.name, t.ty))
            if sym is None:
                raise TranslateError(
                    f"no monomorphic instance registered for {t.name}")
            return sym
        if isinstance(t, Abs):
            name = _fresh_symbol(var_symbol(t.var.name), set(env.values()))
            env2 = dict(env)
            env2[t.var] = name
            return "(^[%s:%s]: %s)" % (name, self.thf_type(t.var.ty),
                                       self.expr(t.body, env2))
        head, args = app_spine(t)
        parts = [self.expr(head, env)] + [self.expr(a, env) for a in args]
        return "(%s)" % " @ ".join(parts)


def export_thf(goal: HolTerm, premises, goal_name="goal",
               cap: int = THF_INSTANCE_CAP, mono: MonoResult | None = None) -> FoProblem:
    """Monomorphised THF0 problem: curried application, instance constants
    with suffixed names, ``_monomorphizedN`` axiom labels."""
    if mono is None:
        mono = monomorphise(goal, premises, goal_name, cap)
    renderer = _ThfRenderer(mono.instance_names)
    problem = FoProblem(format="thf", goal_name=goal_name)
    for pname, serial, inst in mono.instances:
        label = axiom_label("%s_monomorphized%d" % (pname, serial))
        problem.axioms.append((label, renderer.expr(inst, {})))
        problem.premise_names[label] = pname
    problem.conjecture = ("conjecture", renderer.expr(mono.goal, {}))

    decls = []
    for name in sorted(renderer.atom_types):
        decls.append("thf(t%s, type, %s : $tType)." % (mangle(name), name))
    by_const: dict = {}
    for (cname, cty), sym in mono.instance_names.items():
        by_const.setdefault(cname, []).append((cty, sym))
    for cname in sorted(by_const):
        for cty, sym in sorted(by_const[cname], key=lambda p: print_type(p[0])):
            decls.append("thf(c%s, type, %s : %s)." % (
                mangle(sym), sym, renderer.thf_type(cty)))
    problem.type_decls = decls
    return problem


# ---------------------------------------------------------------------------
# Driver


def translate_problem(fmt: str, goal: HolTerm, premises, goal_name="goal") -> FoProblem:
    """Full pipeline for one problem: lift (first-order formats only) and
    export in the requested dialect."""
    if fmt not in FORMATS:
        raise TranslateError(f"unknown format {fmt!r}")
    if fmt == "thf":
        return export_thf(goal, premises, goal_name)
    goal2, premises2, defs = lambda_lift(goal, premises)
    if fmt == "fof":
        return export_fof(goal2, premises2, defs, goal_name)
    return export_tff1(goal2, premises2, defs, goal_name)
