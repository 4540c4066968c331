"""Human-readable rules and approximate class axioms from fitted models."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .dataset import Dataset
from .exceptions import ExtractionError
from .mbnb import MbnbParams
from .mixture import HbmModel, HbmVariant, responsibilities

THING = "Thing"


@dataclass(frozen=True)
class ConjunctiveRule:
    """IF target(x) with ``prior`` THEN each listed feature is Bernoulli.

    ``literals`` are (feature, P(feature = 1)).  A simplified rule keeps one
    literal per feature, the more probable value; ``value`` records it.
    """

    target: str
    prior: float
    literals: tuple[tuple[str, float], ...]
    simplified: bool = False

    def simplified_literals(self) -> list[tuple[str, int, float]]:
        """(feature, value, probability of that value) for each feature."""
        out = []
        for name, p in self.literals:
            out.append((name, 1, p) if p >= 0.5 else (name, 0, 1.0 - p))
        return out


@dataclass(frozen=True)
class ApproximateAxiom:
    target: str
    positive_features: tuple[str, ...]
    negative_features: tuple[str, ...]
    theta: float
    uninformative: tuple[str, ...] = ()

    @property
    def trivial(self) -> bool:
        return not self.positive_features and not self.negative_features


@dataclass(frozen=True)
class RuleComponent:
    component: int
    link: float
    rule: ConjunctiveRule


@dataclass(frozen=True)
class DisjunctiveRuleSet:
    target: str
    prior: float
    theta: float
    components: tuple[RuleComponent, ...]
    complement: tuple[RuleComponent, ...] = field(default=())


def extract_rule(m: MbnbParams, target: str, simplified: bool = False, complement: bool = False) -> ConjunctiveRule:
    """Rule for ``target`` (or for its complement, built from p0 and 1 - pi)."""
    if complement:
        return ConjunctiveRule(
            _negate(target), 1.0 - m.pi, tuple(zip(m.feature_names, map(float, m.p0))), simplified
        )
    return ConjunctiveRule(target, m.pi, tuple(zip(m.feature_names, map(float, m.p1))), simplified)


def _negate(target: str) -> str:
    return f"not {target}"


def extract_axiom(m: MbnbParams, target: str, theta: float) -> ApproximateAxiom:
    """Threshold the class-conditional probabilities at ``theta``.

    Features above ``theta`` under both classes carry no information about
    membership; they are dropped from both sides and listed as uninformative.
    """
    if not 0.5 < theta < 1.0:
        raise ValueError(f"theta must lie in (0.5, 1), got {theta}")
    pos = m.p1 > theta
    neg = m.p0 > theta
    both = pos & neg
    names = np.array(m.feature_names, dtype=object)
    return ApproximateAxiom(
        target,
        tuple(names[pos & ~both]),
        tuple(names[neg & ~both]),
        theta,
        tuple(names[both]),
    )


def component_links(h: HbmModel, ds: Dataset | None = None, X=None, y=None) -> np.ndarray:
    """P(z_k = 1 | target) per component.

    Pipeline models estimate it as the mean responsibility over positive rows;
    class-conditional models use the positive-class mixture weights.
    """
    if h.variant is HbmVariant.CLASS_CONDITIONAL:
        return h.class_mixtures[1].mu.copy()
    if ds is not None:
        X, y = ds.X, ds.y
    if X is None or y is None:
        raise ExtractionError("pipeline models need labelled rows to estimate component links")
    y = np.asarray(y, dtype=float)
    positives = np.asarray(X, dtype=float)[y == 1.0]
    if positives.shape[0] == 0:
        raise ExtractionError("no positive-labelled rows to estimate component links")
    R = np.atleast_2d(responsibilities(h.mixture, positives))
    return R.mean(axis=0)


def extract_disjunctive(h: HbmModel, target: str, theta: float, ds: Dataset | None = None) -> DisjunctiveRuleSet:
    """Disjunction of the components linked to ``target`` above ``theta``.

    The complement is defined by the components whose link is at most
    ``1 - theta`` (pipeline) or by the negative-class components whose weight
    exceeds ``theta`` (class-conditional).
    """
    links = component_links(h, ds)
    if h.variant is HbmVariant.CLASS_CONDITIONAL:
        pos_mix, neg_mix = h.class_mixtures[1], h.class_mixtures[0]
        comps = _components(target, pos_mix.P, links, h.top.feature_names, links > theta)
        compl = _components(_negate(target), neg_mix.P, neg_mix.mu, h.top.feature_names, neg_mix.mu > theta)
    else:
        P = h.mixture.P
        comps = _components(target, P, links, h.top.feature_names, links > theta)
        compl = _components(_negate(target), P, links, h.top.feature_names, links <= 1.0 - theta)
    return DisjunctiveRuleSet(target, h.pi, theta, comps, compl)


def _components(target, P, links, names, mask) -> tuple[RuleComponent, ...]:
    out = []
    for k in np.flatnonzero(mask):
        sub = f"{target}_{k + 1}" if not target.startswith("not ") else f"{target[4:]}_not_{k + 1}"
        rule = ConjunctiveRule(sub, float(links[k]), tuple(zip(names, map(float, P[k]))))
        out.append(RuleComponent(int(k) + 1, float(links[k]), rule))
    return tuple(out)


# ------------------------------------------------------------------ render

def _p(x: float) -> str:
    return f"{x:.4f}"


def render(obj, simplified: bool | None = None) -> str:
    if isinstance(obj, ApproximateAxiom):
        return _render_axiom(obj)
    if isinstance(obj, ConjunctiveRule):
        return _render_rule(obj, obj.simplified if simplified is None else simplified)
    if isinstance(obj, DisjunctiveRuleSet):
        return _render_disjunctive(obj, bool(simplified))
    raise TypeError(f"cannot render {type(obj).__name__}")


def _render_axiom(a: ApproximateAxiom) -> str:
    if a.trivial:
        return f"{a.target} SubClassOf: {THING}  # trivial (no feature exceeded theta={a.theta:g})"
    parts = list(a.positive_features) + [f"not {f}" for f in a.negative_features]
    return f"{a.target} SubClassOf: " + " and ".join(parts)


def _render_rule(r: ConjunctiveRule, simplified: bool) -> str:
    lines = [f"IF {r.target}(x) with prior {_p(r.prior)} THEN each feature is independently Bernoulli distributed"]
    if simplified:
        for name, v, p in r.simplified_literals():
            lines.append(f"    AND {name} = {v} with probability {_p(p)}")
    else:
        for name, p in r.literals:
            lines.append(f"    AND {name} = 1 with probability {_p(p)} AND {name} = 0 with probability {_p(1.0 - p)}")
    return "\n".join(lines)


def _render_disjunctive(d: DisjunctiveRuleSet, simplified: bool) -> str:
    names = [c.rule.target for c in d.components]
    axiom = f"{d.target} SubClassOf: " + (" or ".join(names) if names else "Nothing")
    lines = [axiom, "", f"IF {d.target}(x) with prior {_p(d.prior)} THEN"]
    for c in d.components:
        lines.append(f"    z_{c.component} = 1 with probability {_p(c.link)}")
    for c in d.components:
        lines += ["", _render_rule(c.rule, simplified)]
    if d.complement:
        cnames = [c.rule.target for c in d.complement]
        lines += ["", f"not {d.target} SubClassOf: " + " or ".join(cnames)]
        for c in d.complement:
            lines += ["", _render_rule(c.rule, simplified)]
    return "\n".join(lines)


def render_file(obj, model_kind: str, theta: float | None, timestamp: datetime | None = None, simplified: bool | None = None) -> str:
    """Text file body: a header comment (kind, theta, timestamp) then the rendering."""
    ts = (timestamp or datetime.now(timezone.utc)).isoformat(timespec="seconds")
    header = [f"# model: {model_kind}"]
    if theta is not None:
        header.append(f"# theta: {theta:g}")
    header.append(f"# extracted: {ts}")
    return "\n".join(header) + "\n" + render(obj, simplified) + "\n"
