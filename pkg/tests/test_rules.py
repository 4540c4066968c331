from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgbernoulli.dataset import Dataset
from kgbernoulli.exceptions import ExtractionError
from kgbernoulli.mbnb import MbnbParams, fit_mle
from kgbernoulli.mixture import HbmModel, MixtureParams, fit_hbm
from kgbernoulli.rules import (
    ApproximateAxiom,
    component_links,
    extract_axiom,
    extract_disjunctive,
    extract_rule,
    render,
    render_file,
)
from kgbernoulli.synthetic import conjunctive_concept

AXIOM_MODEL = MbnbParams(0.4, [0.95, 0.5], [0.1, 0.97])


def test_full_rule_copies_parameters():
    r = extract_rule(MbnbParams(0.3, [0.9, 0.3], [0.5, 0.5]), "C")
    assert [p for _, p in r.literals] == [0.9, 0.3]
    assert r.prior == 0.3


def test_simplified_rule_keeps_likelier_branch():
    r = extract_rule(MbnbParams(0.3, [0.9, 0.3], [0.5, 0.5]), "C", simplified=True)
    lits = r.simplified_literals()
    assert lits[0] == ("f1", 1, 0.9)
    assert lits[1][:2] == ("f2", 0) and lits[1][2] == pytest.approx(0.7)


def test_complement_rule_uses_negative_class():
    r = extract_rule(MbnbParams(0.3, [0.9, 0.3], [0.2, 0.6]), "C", complement=True)
    assert r.target == "not C"
    assert r.prior == pytest.approx(0.7)
    assert [p for _, p in r.literals] == [0.2, 0.6]


def test_axiom_threshold_filter():
    a = extract_axiom(AXIOM_MODEL, "C", 0.9)
    assert a.positive_features == ("f1",)
    assert a.negative_features == ("f2",)
    assert render(a) == "C SubClassOf: f1 and not f2"


def test_trivial_axiom():
    a = extract_axiom(AXIOM_MODEL, "C", 0.99)
    assert a.trivial
    assert render(a) == "C SubClassOf: Thing  # trivial (no feature exceeded theta=0.99)"


def test_axiom_overlap_is_uninformative():
    a = extract_axiom(MbnbParams(0.5, [0.95, 0.2], [0.96, 0.1]), "C", 0.9)
    assert a.positive_features == () and a.negative_features == ()
    assert a.uninformative == ("f1",)


@pytest.mark.parametrize("theta", [0.5, 1.0, 0.3])
def test_axiom_theta_range(theta):
    with pytest.raises(ValueError):
        extract_axiom(AXIOM_MODEL, "C", theta)


prob = st.floats(0.01, 0.99)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 8).flatmap(lambda d: st.tuples(
    st.lists(prob, min_size=d, max_size=d), st.lists(prob, min_size=d, max_size=d))),
    st.floats(0.51, 0.98), st.floats(0.51, 0.98))
def test_threshold_monotonicity(params, t1, t2):
    lo, hi = sorted((t1, t2))
    m = MbnbParams(0.5, params[0], params[1])
    a_lo = extract_axiom(m, "C", lo)
    a_hi = extract_axiom(m, "C", hi)
    # features in both classes above the low threshold may be dropped as
    # uninformative there while surviving at the higher threshold
    lo_pos = set(a_lo.positive_features) | set(a_lo.uninformative)
    lo_neg = set(a_lo.negative_features) | set(a_lo.uninformative)
    assert set(a_hi.positive_features) <= lo_pos
    assert set(a_hi.negative_features) <= lo_neg


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abcd"), st.booleans()), min_size=1, max_size=4, unique_by=lambda t: t[0]),
       st.lists(st.tuples(st.sampled_from("abcd"), st.booleans()), min_size=1, max_size=4, unique_by=lambda t: t[0]))
def test_render_is_injective(lits1, lits2):
    def axiom(lits):
        return ApproximateAxiom("C", tuple(f for f, pos in lits if pos), tuple(f for f, pos in lits if not pos), 0.9)

    a, b = axiom(lits1), axiom(lits2)
    same = (a.positive_features, a.negative_features) == (b.positive_features, b.negative_features)
    assert (render(a) == render(b)) == same


def test_render_rule_layout_is_stable():
    r = extract_rule(MbnbParams(0.25, [0.9, 0.3], [0.5, 0.5], ("a", "b")), "C", simplified=True)
    text = render(r)
    assert text == render(r)
    assert text.splitlines() == [
        "IF C(x) with prior 0.2500 THEN each feature is independently Bernoulli distributed",
        "    AND a = 1 with probability 0.9000",
        "    AND b = 0 with probability 0.7000",
    ]


def test_render_file_header():
    a = extract_axiom(AXIOM_MODEL, "C", 0.9)
    ts = datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)
    text = render_file(a, "mbnb", 0.9, timestamp=ts)
    assert text.splitlines()[:3] == ["# model: mbnb", "# theta: 0.9", "# extracted: 2024-01-02T03:04:05+00:00"]
    assert text.endswith("C SubClassOf: f1 and not f2\n")


def test_render_rejects_unknown_objects():
    with pytest.raises(TypeError):
        render(object())


# ------------------------------------------------------------- disjunctive

def _two_cluster_positive(seed=0, n=2000):
    """Positives come from two distinct clusters; negatives from a diffuse one."""
    rng = np.random.default_rng(seed)
    z = rng.integers(0, 3, n)
    P = np.array([[0.9] * 4 + [0.1] * 4, [0.1] * 4 + [0.9] * 4, [0.5] * 8])
    X = (rng.random((n, 8)) < P[z]).astype(float)
    y = (z < 2).astype(float)
    return X, y


def test_class_conditional_disjunction():
    X, y = _two_cluster_positive()
    h = fit_hbm(X, y, K=2, restarts=5, variant="class_conditional")
    d = extract_disjunctive(h, "C", 0.3)
    assert len(d.components) == 2
    assert all(c.link > 0.4 for c in d.components)
    assert render(d).splitlines()[0] == "C SubClassOf: C_1 or C_2"


def test_pipeline_disjunction_uses_positive_responsibilities():
    X, y = _two_cluster_positive(1)
    h = fit_hbm(X, y, K=3, restarts=5)
    ds = Dataset.from_arrays(X, y=y)
    links = component_links(h, ds)
    assert links.sum() == pytest.approx(1.0)
    d = extract_disjunctive(h, "C", 0.3, ds)
    assert len(d.components) == 2
    assert all(c.link > 0.4 for c in d.components)


def test_k1_link_is_one():
    X, y = _two_cluster_positive(2, n=300)
    h = fit_hbm(X, y, K=1, restarts=1)
    d = extract_disjunctive(h, "C", 0.5, Dataset.from_arrays(X, y=y))
    assert len(d.components) == 1
    assert d.components[0].link == pytest.approx(1.0)


def test_unused_component_is_excluded():
    mix = MixtureParams(np.array([0.5, 0.5]), np.array([[0.99, 0.99], [0.01, 0.01]]))
    top = MbnbParams(0.5, [0.5, 0.5], [0.5, 0.5])
    h = HbmModel("pipeline", top, mixture=mix)
    ds = Dataset.from_arrays([[1, 1], [1, 1], [0, 0]], y=[1, 1, 0])
    links = component_links(h, ds)
    assert links[1] < 1e-3
    d = extract_disjunctive(h, "C", 0.01, ds)
    assert [c.component for c in d.components] == [1]


def test_pipeline_links_need_positive_rows():
    mix = MixtureParams(np.array([1.0]), np.array([[0.5]]))
    h = HbmModel("pipeline", MbnbParams(0.5, [0.5], [0.5]), mixture=mix)
    with pytest.raises(ExtractionError):
        component_links(h, Dataset.from_arrays([[1]], y=[0]))
    with pytest.raises(ExtractionError):
        component_links(h)


def test_conjunctive_concept_round_trip():
    hits = 0
    for seed in range(20):
        X, y = conjunctive_concept(2000, np.random.default_rng(seed))
        a = extract_axiom(fit_mle(X, y), "C", 0.9)
        hits += set(a.positive_features) == {"f1", "f2", "f3"}
    assert hits >= 19
