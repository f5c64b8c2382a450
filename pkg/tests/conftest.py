import random
from pathlib import Path

import pytest
from hypothesis import settings

from hammerkit.terms import (
    BOOL, Abs, App, Const, Signature, TyApp, Var, mk_binder, mk_const,
    mk_eq, mk_fun,
)

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def sig() -> Signature:
    return Signature()


@pytest.fixture
def real_eq_inv_corpus():
    from hammerkit.corpus import ingest
    d = DATA / "real_eq_inv"
    return ingest(d / "statements.tsv", d / "deps.txt", d / "trivial.txt")


# ---------------------------------------------------------------------------
# Seeded random well-typed term generator (shared by property-style tests
# that want explicit control over the number of cases)

REAL = TyApp("real")
NUM = TyApp("num")

_BASE_TYPES = [BOOL, REAL, NUM, mk_fun(REAL, BOOL), mk_fun(REAL, REAL),
               mk_fun(BOOL, BOOL)]

_CONST_POOL = [
    Const("p0", mk_fun(REAL, BOOL)),
    Const("p1", mk_fun(REAL, BOOL)),
    Const("g0", mk_fun(REAL, REAL)),
    Const("g1", mk_fun(REAL, mk_fun(REAL, REAL))),
    Const("h0", mk_fun(NUM, REAL)),
    Const("c0", REAL),
    Const("c1", REAL),
    Const("n0", NUM),
    Const("b0const", BOOL),
]

_VAR_NAMES = ["x", "y", "z", "w"]


class TermGen:
    """Random well-typed terms: quantifiers, connectives, applications and
    abstractions, with deliberate name shadowing."""

    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    def type(self, depth=2):
        if depth > 0 and self.rng.random() < 0.3:
            return mk_fun(self.type(depth - 1), self.type(depth - 1))
        return self.rng.choice(_BASE_TYPES)

    def term(self, ty, scope, depth):
        rng = self.rng
        options = []
        in_scope = [v for v in scope if v.ty == ty]
        if in_scope:
            options += ["var"] * 3
        consts = [c for c in _CONST_POOL if c.ty == ty]
        if consts:
            options += ["const"] * 2
        if depth > 0:
            options.append("app")
            if ty == BOOL:
                options += ["conn", "quant", "eq"]
            if isinstance(ty, TyApp) and ty.con == "fun":
                options += ["abs", "abs"]
        if not options:
            return self.fallback(ty, scope, depth)
        choice = rng.choice(options)
        if choice == "var":
            return rng.choice(in_scope)
        if choice == "const":
            return rng.choice(consts)
        if choice == "abs":
            v = Var(rng.choice(_VAR_NAMES), ty.args[0])
            body = self.term(ty.args[1], scope + [v], depth - 1)
            return Abs(v, body)
        if choice == "app":
            arg_ty = self.type(1)
            f = self.term(mk_fun(arg_ty, ty), scope, depth - 1)
            a = self.term(arg_ty, scope, depth - 1)
            return App(f, a)
        if choice == "conn":
            name = rng.choice(["conj", "disj", "imp", "neg"])
            if name == "neg":
                return App(mk_const("neg"), self.term(BOOL, scope, depth - 1))
            return App(App(mk_const(name), self.term(BOOL, scope, depth - 1)),
                       self.term(BOOL, scope, depth - 1))
        if choice == "quant":
            v = Var(rng.choice(_VAR_NAMES), self.type(1))
            body = self.term(BOOL, scope + [v], depth - 1)
            return mk_binder(rng.choice(["forall", "exists"]), v, body)
        if choice == "eq":
            t = self.type(1)
            return mk_eq(self.term(t, scope, depth - 1),
                         self.term(t, scope, depth - 1))
        raise AssertionError(choice)

    def fallback(self, ty, scope, depth):
        if ty == BOOL:
            return mk_const("true")
        if ty == REAL:
            return Const("c0", REAL)
        if ty == NUM:
            return Const("n0", NUM)
        if isinstance(ty, TyApp) and ty.con == "fun":
            v = Var("x", ty.args[0])
            return Abs(v, self.term(ty.args[1], scope + [v], max(depth - 1, 0)))
        return Const("u_%s" % ty, ty)

    def statement(self, depth=4):
        return self.term(BOOL, [], depth)


def random_statements(seed: int, count: int, depth: int = 4):
    gen = TermGen(seed)
    return [gen.statement(depth) for _ in range(count)]
