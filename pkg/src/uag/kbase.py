"""Knowledge bases over multimodels.

A multimodel is an algebra G with a finite family of realizations of the
same relation symbols.  Replies to queries are valuations; the decision
procedures compare multimodels up to isomorphism (instance-wise model
isomorphism under a bijection of instances) and up to automorphic
equivalence (Aut groups of matched instances conjugate by one isomorphism
of the underlying algebras).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .budget import Budget, resolve
from .folgeo import (Formula, Model, ModelGeqResult, SetAlgebra, aut_of_model, definable_sets, eval_formula,
                     geom_equivalent_models, is_elementary, model_isomorphism)
from .sigcore import FiniteAlgebra, Homomorphism, Signature, iter_isomorphisms
from .space import PointSet, PointSpace
from .terms import VarContext


@dataclass(eq=False)
class Multimodel:
    algebra: FiniteAlgebra
    signature: Signature
    instances: tuple[Model, ...]
    names: tuple[str, ...]
    name: str = "MM"

    def __post_init__(self):
        if len(self.names) != len(self.instances):
            raise ValueError(f"multimodel {self.name}: names and instances differ in number")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"multimodel {self.name}: duplicate instance names")
        for m in self.instances:
            if m.algebra is not self.algebra or m.signature != self.signature:
                raise ValueError(f"multimodel {self.name}: instance {m.name} has another algebra or signature")

    @classmethod
    def of(cls, G: FiniteAlgebra, name: str, **instances: dict) -> "Multimodel":
        """``Multimodel.of(G, "M", I1={"p": ["1"]}, I2={"p": ["2"]})``."""
        models = [Model.of(G, f"{name}.{k}", **tables) for k, tables in instances.items()]
        sig = models[0].signature if models else G.signature
        # align every instance on the first instance's relation symbols
        models = [Model(G, sig, m.relations, m.name) for m in models]
        return cls(G, sig, tuple(models), tuple(instances), name)

    def __len__(self) -> int:
        return len(self.instances)

    def instance(self, name: str) -> Model:
        return self.instances[self.names.index(name)]


@dataclass
class KnowledgeBase:
    """Lazily evaluated definable-set algebras R_f, one per instance."""

    multimodel: Multimodel
    _auts: dict = field(default_factory=dict, repr=False)

    def aut(self, i: int):
        if i not in self._auts:
            self._auts[i] = aut_of_model(self.multimodel.instances[i])
        return self._auts[i]

    def in_rf(self, i: int, A: PointSet) -> bool:
        """Is A a definable set of instance i?  (Invariance under Aut(f).)"""
        return is_elementary(A, self.multimodel.instances[i], self.aut(i))

    def rf(self, i: int, context: VarContext, budget: Budget | None = None) -> SetAlgebra:
        return definable_sets(self.multimodel.instances[i], context, budget=budget)


def reply_to_query(u: Formula, f: Model, context: VarContext | PointSpace,
                   budget: Budget | None = None) -> PointSet:
    """u*f = Val_f(u)."""
    return eval_formula(u, f, context, budget)


def model_isomorphic(m1: Model, m2: Model, budget: Budget | None = None) -> Homomorphism | None:
    return model_isomorphism(m1, m2, budget)


def _matchings(n: int, ok) -> Iterator[tuple[int, ...]]:
    """Bijections alpha of range(n) with ok(i, alpha[i]), lexicographic order."""
    used = [False] * n
    chosen: list[int] = []

    def rec(i: int):
        if i == n:
            yield tuple(chosen)
            return
        for j in range(n):
            if not used[j] and ok(i, j):
                used[j] = True
                chosen.append(j)
                yield from rec(i + 1)
                chosen.pop()
                used[j] = False

    yield from rec(0)


@dataclass
class KBResult:
    verdict: bool
    reason: str
    alpha: tuple[int, ...] | None = None               # instance i of M1 -> alpha[i] of M2
    witnesses: tuple[Homomorphism, ...] = ()

    def __bool__(self) -> bool:
        return self.verdict


def _check_shapes(M1: Multimodel, M2: Multimodel) -> str | None:
    if M1.signature.rels != M2.signature.rels or not M1.signature.same_algebraic_part(M2.signature):
        raise ValueError(f"multimodels {M1.name} and {M2.name} have different signatures")
    if len(M1) != len(M2):
        return f"instance counts differ ({len(M1)} vs {len(M2)})"
    return None


def kb_isomorphic(M1: Multimodel, M2: Multimodel, budget: Budget | None = None) -> KBResult:
    """Knowledge bases are isomorphic iff the multimodels are: least alpha with f_i ≅ f'_alpha(i)."""
    budget = resolve(budget)
    bad = _check_shapes(M1, M2)
    if bad:
        return KBResult(False, bad)
    n = len(M1)
    table = [[model_isomorphism(M1.instances[i], M2.instances[j], budget) for j in range(n)] for i in range(n)]
    for alpha in _matchings(n, lambda i, j: table[i][j] is not None):
        return KBResult(True, "multimodels are isomorphic", alpha, tuple(table[i][alpha[i]] for i in range(n)))
    return KBResult(False, "no bijection of instances by model isomorphisms")


@dataclass
class AutEqResult:
    verdict: bool
    delta: Homomorphism | None = None                  # G2 -> G1

    def __bool__(self) -> bool:
        return self.verdict


def _conjugates(delta: Homomorphism, aut1, aut2) -> bool:
    """Aut(f2) = delta^-1 Aut(f1) delta, with delta : G2 -> G1."""
    inv = delta.inverse()
    image = {delta.then(g).then(inv).key() for g in aut1}
    return image == {g.key() for g in aut2}


def automorphic_equivalent(m1: Model, m2: Model, budget: Budget | None = None,
                           aut1=None, aut2=None) -> AutEqResult:
    """Least algebra isomorphism delta: G2 -> G1 conjugating Aut(f1) onto Aut(f2)."""
    if m1.signature.rels != m2.signature.rels:
        raise ValueError(f"models {m1.name} and {m2.name} have different relation symbols")
    aut1 = aut1 if aut1 is not None else aut_of_model(m1, budget)
    aut2 = aut2 if aut2 is not None else aut_of_model(m2, budget)
    if len(aut1) != len(aut2):
        return AutEqResult(False)
    for delta in iter_isomorphisms(m2.algebra, m1.algebra, budget):
        if _conjugates(delta, aut1, aut2):
            return AutEqResult(True, delta)
    return AutEqResult(False)


def kb_equivalent(M1: Multimodel, M2: Multimodel, budget: Budget | None = None) -> KBResult:
    """Knowledge bases are equivalent iff the multimodels are automorphically equivalent."""
    budget = resolve(budget)
    bad = _check_shapes(M1, M2)
    if bad:
        return KBResult(False, bad)
    n = len(M1)
    a1 = [aut_of_model(m, budget) for m in M1.instances]
    a2 = [aut_of_model(m, budget) for m in M2.instances]
    table = [[automorphic_equivalent(M1.instances[i], M2.instances[j], budget, a1[i], a2[j]).delta
              for j in range(n)] for i in range(n)]
    for alpha in _matchings(n, lambda i, j: table[i][j] is not None):
        return KBResult(True, "multimodels are automorphically equivalent", alpha,
                        tuple(table[i][alpha[i]] for i in range(n)))
    return KBResult(False, "no bijection of instances by automorphic equivalence")


@dataclass
class MultiGeqResult:
    verdict: bool | None
    reason: str
    alpha: tuple[int, ...] | None = None
    details: list[ModelGeqResult] = field(default_factory=list)


def geom_equivalent_multimodels(M1: Multimodel, M2: Multimodel, max_vars: int = 1, max_size: int = 3,
                                budget: Budget | None = None) -> MultiGeqResult:
    """Tri-state: some bijection alpha with f ≡ f^alpha geometrically for every instance."""
    budget = resolve(budget)
    bad = _check_shapes(M1, M2)
    if bad:
        return MultiGeqResult(False, bad)
    n = len(M1)
    table = [[geom_equivalent_models(M1.instances[i], M2.instances[j], max_vars, max_size, budget)
              for j in range(n)] for i in range(n)]
    for alpha in _matchings(n, lambda i, j: table[i][j].verdict is True):
        return MultiGeqResult(True, "instances matched by isomorphic models", alpha,
                              [table[i][alpha[i]] for i in range(n)])
    for alpha in _matchings(n, lambda i, j: table[i][j].verdict is not False):
        return MultiGeqResult(None, "undecided within the bounds", alpha, [table[i][alpha[i]] for i in range(n)])
    # every bijection meets a refuted pair
    refuted = [table[i][j] for i in range(n) for j in range(n) if table[i][j].verdict is False]
    return MultiGeqResult(False, "every matching contains a refuted pair", None, refuted)
