"""Synthetic knowledge bases and datasets with known generating structure."""

from __future__ import annotations

import numpy as np

# (class, direct superclass or None)
_HIERARCHY = [
    ("Agent", None),
    ("Person", "Agent"),
    ("Organization", "Agent"),
    ("Student", "Person"),
    ("Faculty", "Person"),
    ("Staff", "Person"),
    ("Undergrad", "Student"),
    ("Graduate", "Student"),
    ("FullProfessor", "Faculty"),
    ("AssociateProfessor", "Faculty"),
    ("AssistantProfessor", "Faculty"),
    ("Lecturer", "Faculty"),
    ("AdminStaff", "Staff"),
    ("TechStaff", "Staff"),
    ("University", "Organization"),
    ("Department", "Organization"),
    ("ResearchGroup", "Organization"),
    ("Place", None),
    ("City", "Place"),
    ("Country", "Place"),
    ("Course", None),
    ("GradCourse", "Course"),
    ("UGCourse", "Course"),
    ("Publication", None),
    ("Article", "Publication"),
    ("Book", "Publication"),
]

_DISJOINT_GROUPS = [
    ["Agent", "Place", "Course", "Publication"],
    ["Person", "Organization"],
    ["Student", "Faculty", "Staff"],
    ["Undergrad", "Graduate"],
    ["FullProfessor", "AssociateProfessor", "AssistantProfessor", "Lecturer"],
    ["AdminStaff", "TechStaff"],
    ["University", "Department", "ResearchGroup"],
    ["City", "Country"],
    ["GradCourse", "UGCourse"],
    ["Article", "Book"],
]

_ROLES = ["advisor", "takesCourse", "teacherOf", "memberOf", "worksFor", "authorOf",
          "headOf", "locatedIn", "subOrganizationOf"]

# leaf type -> (count, {role: probability of having at least one assertion})
_POPULATION = {
    "Undergrad": (40, {"takesCourse": 0.8, "memberOf": 0.6}),
    "Graduate": (30, {"takesCourse": 0.6, "advisor": 0.8, "memberOf": 0.7, "authorOf": 0.4}),
    "FullProfessor": (8, {"teacherOf": 0.8, "worksFor": 0.9, "authorOf": 0.9, "headOf": 0.5}),
    "AssociateProfessor": (8, {"teacherOf": 0.8, "worksFor": 0.9, "authorOf": 0.7}),
    "AssistantProfessor": (8, {"teacherOf": 0.7, "worksFor": 0.9, "authorOf": 0.6}),
    "Lecturer": (6, {"teacherOf": 0.9, "worksFor": 0.8}),
    "AdminStaff": (8, {"worksFor": 0.9, "headOf": 0.2}),
    "TechStaff": (7, {"worksFor": 0.9, "memberOf": 0.3}),
    "University": (2, {"locatedIn": 0.9}),
    "Department": (6, {"subOrganizationOf": 0.9, "locatedIn": 0.3}),
    "ResearchGroup": (5, {"subOrganizationOf": 0.9}),
    "City": (3, {"locatedIn": 0.7}),
    "Country": (2, {}),
    "GradCourse": (15, {}),
    "UGCourse": (22, {}),
    "Article": (22, {}),
    "Book": (8, {}),
}

_ROLE_RANGE = {
    "advisor": ["FullProfessor", "AssociateProfessor", "AssistantProfessor"],
    "takesCourse": ["GradCourse", "UGCourse"],
    "teacherOf": ["GradCourse", "UGCourse"],
    "memberOf": ["Department", "ResearchGroup"],
    "worksFor": ["Department", "University"],
    "authorOf": ["Article", "Book"],
    "headOf": ["Department", "ResearchGroup"],
    "locatedIn": ["City", "Country"],
    "subOrganizationOf": ["University", "Department"],
}


def _parent(c: str) -> str | None:
    return dict(_HIERARCHY)[c]


def make_university_kb(seed: int = 0) -> str:
    """A 200-individual university-domain knowledge base in the assertion format.

    Each individual is typed at its leaf class with probability 0.55, only at
    the parent class with probability 0.3 and left untyped otherwise, so the
    encoding has the open-world gaps real knowledge graphs show.  ``headOf``
    and a few other roles are declared closed.
    """
    rng = np.random.default_rng(seed)
    lines = ["# synthetic university knowledge base", ""]
    lines += [f"class {c}" for c, _ in _HIERARCHY]
    lines += [f"subclass {c} {p}" for c, p in _HIERARCHY if p]
    for group in _DISJOINT_GROUPS:
        for i, a in enumerate(group):
            for b in group[i + 1:]:
                lines.append(f"disjoint {a} {b}")
    lines += [f"role {r}" for r in _ROLES]
    lines += [f"closed {r}" for r in ("headOf", "advisor", "takesCourse", "teacherOf", "authorOf")]
    lines.append("")

    members: dict[str, list[str]] = {}
    for leaf, (count, _) in _POPULATION.items():
        members[leaf] = [f"{leaf.lower()}{i + 1}" for i in range(count)]
    for leaf, names in members.items():
        for a in names:
            lines.append(f"individual {a}")
    lines.append("")

    for leaf, names in members.items():
        roles = _POPULATION[leaf][1]
        parent = _parent(leaf)
        for a in names:
            u = rng.random()
            if u < 0.55:
                lines.append(f"instance {a} {leaf}")
            elif u < 0.85 and parent:
                lines.append(f"instance {a} {parent}")
                # occasionally rule out a sibling explicitly
                siblings = [c for c, p in _HIERARCHY if p == parent and c != leaf]
                if siblings and rng.random() < 0.3:
                    lines.append(f"neg-instance {a} {siblings[int(rng.integers(len(siblings)))]}")
            for role, prob in roles.items():
                if rng.random() < prob:
                    targets = [t for c in _ROLE_RANGE[role] for t in members[c]]
                    b = targets[int(rng.integers(len(targets)))]
                    lines.append(f"rel {role} {a} {b}")
    return "\n".join(lines) + "\n"


TOY_KB = """\
# a tiny example knowledge base
class Person
class Student
class Professor
class Course
subclass Student Person
subclass Professor Person
disjoint Student Professor
disjoint Person Course
role teaches
role takes
closed teaches

instance alice Student
instance bob Professor
instance carol Person
neg-instance carol Professor
instance ml Course
individual dave
rel takes alice ml
rel teaches bob ml
"""


# ------------------------------------------------------------ numeric data

def sample_mbnb(pi, p1, p0, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` labelled rows from a naive Bayes model."""
    p1 = np.asarray(p1, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    y = (rng.random(n) < pi).astype(float)
    probs = np.where(y[:, None] == 1.0, p1, p0)
    X = (rng.random((n, p1.size)) < probs).astype(float)
    return X, y


def sample_mixture(mu, P, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` rows from a Bernoulli mixture; returns (X, component index)."""
    P = np.asarray(P, dtype=float)
    z = rng.choice(len(mu), size=n, p=mu)
    X = (rng.random((n, P.shape[1])) < P[z]).astype(float)
    return X, z


def two_block_components(D: int = 10, high: float = 0.9, low: float = 0.1) -> np.ndarray:
    """Two components: one high on the first half of the coordinates, one on the second."""
    half = D // 2
    P = np.full((2, D), low)
    P[0, :half] = high
    P[1, half:] = high
    return P


def xor_blocks(n: int, rng, D: int = 10, high: float = 0.9, low: float = 0.1):
    """Labels are the XOR of two latent block states.

    Each row picks block A and block B independently high or low; the label
    is positive iff both agree.  Every feature then has the same marginal in
    both classes, so naive Bayes cannot separate them, while a two-component
    mixture per class can.
    """
    half = D // 2
    a = rng.random(n) < 0.5
    b = rng.random(n) < 0.5
    probs = np.empty((n, D))
    probs[:, :half] = np.where(a, high, low)[:, None]
    probs[:, half:] = np.where(b, high, low)[:, None]
    X = (rng.random((n, D)) < probs).astype(float)
    y = (a == b).astype(float)
    return X, y


def conjunctive_concept(n: int, rng, D: int = 10, defining=(0, 1, 2), pi: float = 0.5,
                        strong: float = 0.98):
    """Positives have the defining features with probability ``strong``; every
    other probability is 0.5."""
    p1 = np.full(D, 0.5)
    p1[list(defining)] = strong
    p0 = np.full(D, 0.5)
    return sample_mbnb(pi, p1, p0, n, rng)


def erase(values: np.ndarray, fraction: float, rng) -> np.ndarray:
    """Copy of ``values`` with a uniformly random ``fraction`` of cells set to nan."""
    out = np.array(values, dtype=float)
    out[rng.random(out.shape) < fraction] = np.nan
    return out
