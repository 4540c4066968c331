"""A restricted knowledge-base format and its open-world ternary encoding.

The entailment engine is a small forward-chaining fragment: asserted types
propagate up the subclass closure, disjointness and negative assertions
refute classes, and refutations propagate down to subclasses.  Existential
role features are True when an outgoing role assertion exists and, unless the
role is declared ``closed``, Unknown otherwise.

Document syntax (one directive per line, ``#`` starts a comment)::

    class <C>
    subclass <C> <D>
    disjoint <C> <D>
    role <r>
    closed <r>
    individual <a>
    instance <a> <C>
    neg-instance <a> <C>
    rel <r> <a> <b>
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dataset import Dataset, infer_feature_info
from .exceptions import InconsistencyError, KbParseError

_ARITY = {
    "class": 1,
    "subclass": 2,
    "disjoint": 2,
    "role": 1,
    "closed": 1,
    "individual": 1,
    "instance": 2,
    "neg-instance": 2,
    "rel": 3,
}


class FeatureKind(enum.Enum):
    NAMED_CLASS = "class"
    EXISTS = "exists"


@dataclass(frozen=True)
class Feature:
    kind: FeatureKind
    name: str

    @classmethod
    def named(cls, class_name: str) -> "Feature":
        return cls(FeatureKind.NAMED_CLASS, class_name)

    @classmethod
    def exists(cls, role: str) -> "Feature":
        return cls(FeatureKind.EXISTS, role)

    @property
    def label(self) -> str:
        """Column name used in encoded datasets."""
        if self.kind is FeatureKind.NAMED_CLASS:
            return self.name
        return f"some_{self.name}"

    def __str__(self):
        return self.name if self.kind is FeatureKind.NAMED_CLASS else f"∃{self.name}.⊤"


@dataclass(frozen=True, eq=False)
class KnowledgeBase:
    classes: tuple[str, ...] = ()
    subclass_axioms: frozenset[tuple[str, str]] = frozenset()
    disjointness: frozenset[frozenset[str]] = frozenset()
    roles: tuple[str, ...] = ()
    closed_roles: frozenset[str] = frozenset()
    instance_assertions: frozenset[tuple[str, str, bool]] = frozenset()
    role_assertions: frozenset[tuple[str, str, str]] = frozenset()
    individuals: tuple[str, ...] = ()

    @cached_property
    def superclasses(self) -> dict[str, frozenset[str]]:
        """Reflexive-transitive closure: class -> all its (non-strict) superclasses."""
        direct: dict[str, set[str]] = {c: set() for c in self.classes}
        for sub, sup in self.subclass_axioms:
            direct[sub].add(sup)
        closure: dict[str, frozenset[str]] = {}

        def visit(c: str) -> frozenset[str]:
            if c not in closure:
                acc = {c}
                for d in direct[c]:
                    if d != c:
                        acc |= visit(d)
                closure[c] = frozenset(acc)
            return closure[c]

        for c in self.classes:
            visit(c)
        return closure

    @cached_property
    def subclasses(self) -> dict[str, frozenset[str]]:
        """Reflexive-transitive closure downwards."""
        down: dict[str, set[str]] = {c: set() for c in self.classes}
        for c, sups in self.superclasses.items():
            for s in sups:
                down[s].add(c)
        return {c: frozenset(v) for c, v in down.items()}

    @cached_property
    def _types(self) -> dict[str, dict[str, list]]:
        pos: dict[str, set[str]] = {a: set() for a in self.individuals}
        neg_seed: dict[str, set[str]] = {a: set() for a in self.individuals}
        for a, c, polarity in self.instance_assertions:
            if polarity:
                pos[a] |= self.superclasses[c]
            else:
                neg_seed[a].add(c)
        out = {}
        for a in self.individuals:
            refuted = set(neg_seed[a])
            for pair in self.disjointness:
                x, y = tuple(pair) if len(pair) == 2 else (next(iter(pair)),) * 2
                if x in pos[a]:
                    refuted.add(y)
                if y in pos[a]:
                    refuted.add(x)
            neg: set[str] = set()
            for c in refuted:
                neg |= self.subclasses[c]
            out[a] = {"pos": pos[a], "neg": neg}
        return out

    @cached_property
    def _role_subjects(self) -> dict[str, set[str]]:
        subj: dict[str, set[str]] = {r: set() for r in self.roles}
        for r, a, _ in self.role_assertions:
            subj[r].add(a)
        return subj

    def leaf_classes(self) -> list[str]:
        has_sub = {sup for sub, sup in self.subclass_axioms if sub != sup}
        return [c for c in self.classes if c not in has_sub]


def parse_kb(source: str) -> KnowledgeBase:
    classes: dict[str, int] = {}
    roles: dict[str, int] = {}
    individuals: dict[str, None] = {}
    subclass, disjoint, inst, rels, closed = [], [], [], [], []
    # name -> first line it was referenced on, checked once the document ends
    class_refs: dict[str, int] = {}
    role_refs: dict[str, int] = {}

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        directive, *args = line.split()
        if directive not in _ARITY:
            raise KbParseError(f"unknown directive {directive!r}", lineno)
        if len(args) != _ARITY[directive]:
            raise KbParseError(
                f"{directive!r} takes {_ARITY[directive]} argument(s), got {len(args)}", lineno
            )
        if directive == "class":
            classes.setdefault(args[0], lineno)
        elif directive == "role":
            roles.setdefault(args[0], lineno)
        elif directive == "individual":
            individuals.setdefault(args[0])
        elif directive in ("subclass", "disjoint"):
            for c in args:
                class_refs.setdefault(c, lineno)
            (subclass if directive == "subclass" else disjoint).append((args[0], args[1], lineno))
        elif directive == "closed":
            role_refs.setdefault(args[0], lineno)
            closed.append(args[0])
        elif directive in ("instance", "neg-instance"):
            individuals.setdefault(args[0])
            class_refs.setdefault(args[1], lineno)
            inst.append((args[0], args[1], directive == "instance"))
        else:
            r, a, b = args
            role_refs.setdefault(r, lineno)
            individuals.setdefault(a)
            individuals.setdefault(b)
            rels.append((r, a, b))

    for name, lineno in class_refs.items():
        if name not in classes:
            raise KbParseError(f"undeclared class {name!r}", lineno)
    for name, lineno in role_refs.items():
        if name not in roles:
            raise KbParseError(f"undeclared role {name!r}", lineno)

    _check_acyclic(list(classes), subclass)

    return KnowledgeBase(
        classes=tuple(classes),
        subclass_axioms=frozenset((s, d) for s, d, _ in subclass),
        disjointness=frozenset(frozenset((a, b)) for a, b, _ in disjoint),
        roles=tuple(roles),
        closed_roles=frozenset(closed),
        instance_assertions=frozenset(inst),
        role_assertions=frozenset(rels),
        individuals=tuple(individuals),
    )


def _check_acyclic(classes: list[str], subclass: list[tuple[str, str, int]]) -> None:
    edges: dict[str, list[tuple[str, int]]] = {c: [] for c in classes}
    for s, d, lineno in subclass:
        if s != d:
            edges[s].append((d, lineno))
    WHITE, GREY, BLACK = 0, 1, 2
    color = dict.fromkeys(classes, WHITE)
    for root in classes:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(edges[root]))]
        color[root] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = BLACK
                stack.pop()
                continue
            child, lineno = nxt
            if color[child] == GREY:
                raise KbParseError(f"subclass cycle through {child!r}", lineno)
            if color[child] == WHITE:
                color[child] = GREY
                stack.append((child, iter(edges[child])))


def generate_features(kb: KnowledgeBase) -> list[Feature]:
    """Leaf classes in declaration order, then one existential per role."""
    return [Feature.named(c) for c in kb.leaf_classes()] + [Feature.exists(r) for r in kb.roles]


def entail(kb: KnowledgeBase, individual: str, f: Feature) -> float:
    """Ternary membership of ``individual`` in ``f``: 1.0, 0.0 or nan."""
    types = kb._types.get(individual)
    if types is None:
        raise KeyError(f"unknown individual {individual!r}")
    if f.kind is FeatureKind.NAMED_CLASS:
        if f.name not in kb.superclasses:
            raise KeyError(f"unknown class {f.name!r}")
        is_pos = f.name in types["pos"]
        is_neg = f.name in types["neg"]
        if is_pos and is_neg:
            raise InconsistencyError(individual, f.name)
        return 1.0 if is_pos else 0.0 if is_neg else np.nan
    if f.name not in kb._role_subjects:
        raise KeyError(f"unknown role {f.name!r}")
    if individual in kb._role_subjects[f.name]:
        return 1.0
    return 0.0 if f.name in kb.closed_roles else np.nan


def encode_individuals(kb: KnowledgeBase, feats: list[Feature]) -> Dataset:
    if not feats:
        raise ValueError("at least one feature is required")
    X = np.array(
        [[entail(kb, a, f) for f in feats] for a in kb.individuals], dtype=float
    ).reshape(len(kb.individuals), len(feats))
    names = [f.label for f in feats]
    return Dataset(infer_feature_info(names, X), X, None, kb.individuals, has_ids=True)


def check_consistency(kb: KnowledgeBase) -> None:
    """Raise :class:`InconsistencyError` on the first clashing (individual, class)."""
    for a in kb.individuals:
        t = kb._types[a]
        clash = t["pos"] & t["neg"]
        if clash:
            c = next(c for c in kb.classes if c in clash)
            raise InconsistencyError(a, c)

