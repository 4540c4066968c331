"""Benchmark harness: random target problems, stratified CV, metrics, rank tests."""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy import stats

from .dataset import Dataset, variance_select
from .em import EmConfig, MultivariateBernoulliNBEM
from .exceptions import KgBernoulliError, ProblemGenerationError
from .kg import Feature, KnowledgeBase, encode_individuals, generate_features
from .mbnb import MultivariateBernoulliNB
from .mixture import HierarchicalBernoulliClassifier, select_k

logger = logging.getLogger(__name__)

MODELS = ("mbnb", "mbnb-em", "hbm")
METRICS = ("precision", "recall", "f1", "gmean")


# ------------------------------------------------------------------ problems

@dataclass(frozen=True)
class Literal:
    feature: str
    negated: bool = False

    def __str__(self):
        return f"not {self.feature}" if self.negated else self.feature


@dataclass(frozen=True, eq=False)
class Problem:
    """A target class defined as a disjunction of conjunctions of literals."""

    name: str
    definition: tuple[tuple[Literal, ...], ...]
    labels: np.ndarray

    @property
    def counts(self) -> dict[str, int]:
        y = self.labels
        return {
            "positive": int(np.sum(y == 1.0)),
            "negative": int(np.sum(y == 0.0)),
            "unknown": int(np.sum(np.isnan(y))),
        }

    def describe(self) -> str:
        return " or ".join("(" + " and ".join(map(str, conj)) + ")" for conj in self.definition)


def label_individuals(ds: Dataset, definition) -> np.ndarray:
    """Three-valued (Kleene) evaluation of a DNF definition on every row."""
    col = {name: i for i, name in enumerate(ds.feature_names)}
    n = ds.n_rows
    any_true = np.zeros(n, dtype=bool)
    all_false = np.ones(n, dtype=bool)
    for conj in definition:
        conj_true = np.ones(n, dtype=bool)
        conj_false = np.zeros(n, dtype=bool)
        for lit in conj:
            v = ds.X[:, col[lit.feature]]
            if lit.negated:
                v = 1.0 - v
            conj_true &= v == 1.0
            conj_false |= v == 0.0
        any_true |= conj_true
        all_false &= conj_false
    return np.where(any_true, 1.0, np.where(all_false, 0.0, np.nan))


def generate_problems_from_dataset(
    ds: Dataset,
    n: int = 10,
    min_pos: int = 10,
    min_neg: int = 10,
    seed: int = 42,
    n_disjuncts: tuple[int, int] = (2, 3),
    n_literals: tuple[int, int] = (1, 2),
    min_stratum: int = 0,
    max_rejections: int = 10_000,
) -> list[Problem]:
    """Rejection-sample ``n`` distinct DNF targets over the columns of ``ds``.

    ``min_stratum`` additionally rejects targets with a non-empty label
    stratum (positive/negative/unknown) smaller than it, so that the problem
    can be split into that many stratified folds.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    names = ds.feature_names
    D = len(names)
    if D == 0:
        raise ProblemGenerationError("no features to build targets from")
    problems: list[Problem] = []
    seen: set = set()
    failures: Counter = Counter()
    rejected = 0
    while len(problems) < n:
        if rejected >= max_rejections:
            tightest, _ = failures.most_common(1)[0]
            raise ProblemGenerationError(
                f"gave up after {rejected} rejected targets; most frequent failure: {tightest}"
            )
        n_conj = int(rng.integers(n_disjuncts[0], n_disjuncts[1] + 1))
        definition = []
        for _ in range(n_conj):
            n_lit = min(int(rng.integers(n_literals[0], n_literals[1] + 1)), D)
            cols = sorted(rng.choice(D, size=n_lit, replace=False).tolist())
            negs = rng.random(n_lit) < 0.5
            definition.append(tuple(Literal(names[c], bool(neg)) for c, neg in zip(cols, negs)))
        definition = tuple(sorted(set(definition), key=lambda c: [(l.feature, l.negated) for l in c]))
        if definition in seen:
            failures["duplicate target"] += 1
            rejected += 1
            continue
        labels = label_individuals(ds, definition)
        n_pos = int(np.sum(labels == 1.0))
        n_neg = int(np.sum(labels == 0.0))
        n_unk = int(np.sum(np.isnan(labels)))
        reason = None
        if n_pos < min_pos:
            reason = f"fewer than min_pos={min_pos} positives"
        elif n_neg < min_neg:
            reason = f"fewer than min_neg={min_neg} negatives"
        elif min_stratum and any(0 < c < min_stratum for c in (n_pos, n_neg, n_unk)):
            reason = f"a label stratum smaller than {min_stratum}"
        if reason:
            failures[reason] += 1
            rejected += 1
            continue
        seen.add(definition)
        problems.append(Problem(f"problem_{len(problems) + 1:02d}", definition, labels))
    return problems


def generate_problems(kb: KnowledgeBase, feats: list[Feature] | None = None, n: int = 10,
                      min_pos: int = 10, min_neg: int = 10, seed: int = 42, **kwargs) -> list[Problem]:
    feats = generate_features(kb) if feats is None else feats
    return generate_problems_from_dataset(encode_individuals(kb, feats), n, min_pos, min_neg, seed, **kwargs)


# ------------------------------------------------------------------ folds

@dataclass(frozen=True, eq=False)
class FoldSplit:
    assignments: np.ndarray
    k: int

    def test_mask(self, fold: int) -> np.ndarray:
        return self.assignments == fold

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


def _strata(labels: np.ndarray) -> list[np.ndarray]:
    return [np.flatnonzero(labels == 1.0), np.flatnonzero(labels == 0.0), np.flatnonzero(np.isnan(labels))]


def stratified_kfold(labels, k: int, seed: int = 42) -> FoldSplit:
    """Shuffle each label stratum and deal it round-robin across folds.

    Dealing continues where the previous stratum stopped, which keeps the
    overall fold sizes within one of each other.
    """
    labels = np.asarray(labels, dtype=float)
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.default_rng(seed)
    assignments = np.empty(labels.size, dtype=int)
    offset = 0
    for idx in _strata(labels):
        if idx.size == 0:
            continue
        if idx.size < k:
            raise ValueError(f"a label stratum has {idx.size} rows, fewer than k={k} folds")
        perm = rng.permutation(idx)
        assignments[perm] = (offset + np.arange(perm.size)) % k
        offset = (offset + perm.size) % k
    return FoldSplit(assignments, k)


# ------------------------------------------------------------------ metrics

@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    gmean: float
    precision_std: float = 0.0
    recall_std: float = 0.0
    f1_std: float = 0.0
    gmean_std: float = 0.0
    support: tuple[int, int] = (0, 0)
    undefined: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return asdict(self)


def _ratio(num: float, den: float, flag: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


def compute_metrics(y_true, y_pred) -> MetricsReport:
    """Support-weighted precision/recall/F1 over both classes, plus the G-mean.

    Zero-denominator quantities are reported as 0 and named in ``undefined``.
    """
    t = np.asarray(y_true).astype(int).ravel()
    p = np.asarray(y_pred).astype(int).ravel()
    if t.size == 0:
        raise ValueError("no test examples")
    if t.size != p.size:
        raise ValueError("y_true and y_pred differ in length")
    flags: list[str] = []
    prec, rec, f1, support = [], [], [], []
    for c in (0, 1):
        tp = float(np.sum((t == c) & (p == c)))
        n_true = float(np.sum(t == c))
        n_pred = float(np.sum(p == c))
        pc = _ratio(tp, n_pred, f"precision[{c}]", flags)
        rc = _ratio(tp, n_true, f"recall[{c}]", flags)
        fc = _ratio(2 * pc * rc, pc + rc, f"f1[{c}]", flags)
        prec.append(pc)
        rec.append(rc)
        f1.append(fc)
        support.append(int(n_true))
    w = np.array(support, dtype=float) / t.size
    return MetricsReport(
        precision=float(w @ prec),
        recall=float(w @ rec),
        f1=float(w @ f1),
        gmean=float(np.sqrt(rec[0] * rec[1])),
        support=(support[0], support[1]),
        undefined=tuple(flags),
    )


def aggregate_metrics(reports: list[MetricsReport]) -> MetricsReport:
    """Mean and (population) standard deviation of each metric."""
    arr = {m: np.array([getattr(r, m) for r in reports]) for m in METRICS}
    flags = sorted({f for r in reports for f in r.undefined})
    support = tuple(int(sum(r.support[i] for r in reports)) for i in (0, 1))
    return MetricsReport(
        **{m: float(arr[m].mean()) for m in METRICS},
        **{f"{m}_std": float(arr[m].std()) for m in METRICS},
        support=support,
        undefined=tuple(flags),
    )


# ------------------------------------------------------------------ rank test

# Critical values q_alpha of the Nemenyi test (studentized range / sqrt(2), infinite df)
NEMENYI_Q = {
    0.05: {2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850, 7: 2.949, 8: 3.031, 9: 3.102, 10: 3.164},
    0.10: {2: 1.645, 3: 2.052, 4: 2.291, 5: 2.459, 6: 2.589, 7: 2.693, 8: 2.780, 9: 2.855, 10: 2.920},
}


@dataclass(frozen=True)
class RankTestResult:
    friedman_statistic: float
    p_value: float
    mean_ranks: dict[str, float]
    critical_difference: float
    significant_pairs: tuple[tuple[str, str], ...]
    alpha: float = 0.05

    def render(self) -> str:
        lines = [
            f"Friedman chi-square: {self.friedman_statistic:.6f}",
            f"p-value: {self.p_value:.6f}",
            f"Nemenyi critical difference (alpha={self.alpha:g}): {self.critical_difference:.6f}",
            "Mean ranks:",
        ]
        lines += [f"  {name}: {r:.6f}" for name, r in self.mean_ranks.items()]
        lines.append("Significant pairs:")
        lines += [f"  {a} vs {b}" for a, b in self.significant_pairs] or ["  none"]
        return "\n".join(lines) + "\n"


def friedman_nemenyi(scores, alpha: float = 0.05, model_names=None) -> RankTestResult:
    """Friedman test on a (problems x models) score matrix, higher scores better,
    followed by the Nemenyi critical-difference comparison."""
    S = np.asarray(scores, dtype=float)
    if S.ndim != 2 or S.shape[0] < 2 or S.shape[1] < 2:
        raise ValueError("need at least 2 problems and 2 models")
    if alpha not in NEMENYI_Q:
        raise ValueError("alpha must be 0.05 or 0.10")
    N, k = S.shape
    if k not in NEMENYI_Q[alpha]:
        raise ValueError("Nemenyi constants are tabulated for at most 10 models")
    names = list(model_names) if model_names is not None else [f"model_{j + 1}" for j in range(k)]
    ranks = np.apply_along_axis(stats.rankdata, 1, -S)
    R = ranks.mean(axis=0)
    chi2 = 12.0 * N / (k * (k + 1)) * (np.sum(R ** 2) - k * (k + 1) ** 2 / 4.0)
    chi2 = max(float(chi2), 0.0)
    if chi2 < 1e-12:
        chi2 = 0.0
    p = float(stats.chi2.sf(chi2, k - 1))
    cd = NEMENYI_Q[alpha][k] * np.sqrt(k * (k + 1) / (6.0 * N))
    pairs = tuple(
        (names[i], names[j])
        for i in range(k)
        for j in range(i + 1, k)
        if abs(R[i] - R[j]) > cd
    )
    return RankTestResult(chi2, p, dict(zip(names, map(float, R))), float(cd), pairs, alpha)


# ------------------------------------------------------------------ benchmark

@dataclass(frozen=True)
class BenchmarkConfig:
    models: tuple[str, ...] = MODELS
    folds: int = 10
    n_problems: int = 10
    seed: int = 42
    min_pos: int = 10
    min_neg: int = 10
    variance_cutoff: float = 0.01
    alpha: float = 1.0
    mbnb_imputation: str = "uninformative"
    k_grid: tuple[int, ...] = tuple(range(2, 11))
    restarts: int = 10
    hbm_variant: str = "pipeline"
    tol: float = 1e-6
    max_iter: int = 200
    rank_metric: str = "f1"
    rank_alpha: float = 0.05

    def __post_init__(self):
        unknown = set(self.models) - set(MODELS)
        if unknown:
            raise ValueError(f"unknown models: {sorted(unknown)}")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if self.rank_metric not in METRICS:
            raise ValueError(f"rank_metric must be one of {METRICS}")


def make_model(name: str, cfg: BenchmarkConfig, n_components: int):
    if name == "mbnb":
        return MultivariateBernoulliNB(alpha=cfg.alpha, imputation=cfg.mbnb_imputation)
    if name == "mbnb-em":
        return MultivariateBernoulliNBEM(alpha=cfg.alpha, tol=cfg.tol, max_iter=cfg.max_iter)
    if name == "hbm":
        return HierarchicalBernoulliClassifier(
            n_components=n_components, variant=cfg.hbm_variant, restarts=cfg.restarts,
            alpha=cfg.alpha, tol=cfg.tol, max_iter=cfg.max_iter, random_state=cfg.seed,
        )
    raise ValueError(f"unknown model {name!r}")


@dataclass
class ProblemResult:
    problem: Problem
    folds: dict[str, list[MetricsReport]] = field(default_factory=dict)
    test_sizes: list[int] = field(default_factory=list)
    error: str | None = None

    def summary(self, model: str) -> MetricsReport:
        return aggregate_metrics(self.folds[model])


@dataclass
class BenchmarkReport:
    config: BenchmarkConfig
    features: list[str]
    n_individuals: int
    selected_k: int | None
    k_table: dict
    problems: list[ProblemResult]
    summary: dict[str, MetricsReport]
    rank_test: RankTestResult | None

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "metric", "mean", "std"])
        for model, rep in self.summary.items():
            for m in METRICS:
                w.writerow([model, m, f"{getattr(rep, m):.6f}", f"{getattr(rep, m + '_std'):.6f}"])
        return buf.getvalue()

    def table(self) -> str:
        """Plain-text table: one row per metric, one column per model, mean ± std."""
        models = list(self.summary)
        lines = ["metric    " + "".join(f"{m:>20}" for m in models)]
        for metric in METRICS:
            cells = "".join(
                f"{getattr(self.summary[m], metric):>11.3f} ± {getattr(self.summary[m], metric + '_std'):.3f}"
                for m in models
            )
            lines.append(f"{metric:<10}{cells}")
        return "\n".join(lines) + "\n"


def _problem_csv(res: ProblemResult, models) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "fold", *METRICS, "n_neg", "n_pos", "undefined"])
    for model in models:
        for f, r in enumerate(res.folds.get(model, [])):
            w.writerow([model, f, *(f"{getattr(r, m):.6f}" for m in METRICS), *r.support, ";".join(r.undefined)])
        if res.folds.get(model):
            s = res.summary(model)
            w.writerow([model, "mean", *(f"{getattr(s, m):.6f}" for m in METRICS), *s.support, ""])
    return buf.getvalue()


def evaluate_problem(X: np.ndarray, problem: Problem, cfg: BenchmarkConfig, n_components: int,
                     fold_seed: int, feature_names=None) -> ProblemResult:
    """Stratified CV of every configured model on one problem.

    Each definite-labelled row is tested exactly once per model; unlabelled
    rows only ever appear in training folds.
    """
    res = ProblemResult(problem)
    y = problem.labels
    split = stratified_kfold(y, cfg.folds, fold_seed)
    definite = ~np.isnan(y)
    for f in range(cfg.folds):
        test = split.test_mask(f) & definite
        train = ~split.test_mask(f)
        res.test_sizes.append(int(test.sum()))
        for name in cfg.models:
            model = make_model(name, cfg, n_components)
            model.fit(X[train], y[train], feature_names=feature_names)
            pred = model.predict(X[test])
            res.folds.setdefault(name, []).append(compute_metrics(y[test], pred))
    return res


def run_benchmark(kb: KnowledgeBase, config: BenchmarkConfig = BenchmarkConfig(),
                  output_dir=None, timestamp: datetime | None = None) -> BenchmarkReport:
    """Encode, select features, generate problems and cross-validate every model.

    Per-problem failures are recorded and do not abort the run.  When
    ``output_dir`` is given the report files are written there.
    """
    cfg = config
    feats = generate_features(kb)
    full = encode_individuals(kb, feats)
    problems = generate_problems_from_dataset(
        full, cfg.n_problems, cfg.min_pos, cfg.min_neg, cfg.seed, min_stratum=cfg.folds
    )
    ds = variance_select(full, cfg.variance_cutoff)
    if ds.n_features == 0:
        raise KgBernoulliError(f"no feature survives variance cutoff {cfg.variance_cutoff}")
    em_cfg = EmConfig(tol=cfg.tol, max_iter=cfg.max_iter, seed=cfg.seed)

    selected_k, k_table = None, {}
    if "hbm" in cfg.models:
        selected_k, k_table = select_k(ds.X, cfg.k_grid, cfg.restarts, em_cfg)
        logger.info("selected K=%d by BIC", selected_k)

    results = []
    for i, prob in enumerate(problems):
        logger.info("evaluating %s: %s", prob.name, prob.describe())
        try:
            res = evaluate_problem(ds.X, prob, cfg, selected_k or 2, cfg.seed + i, ds.feature_names)
        except (KgBernoulliError, ValueError) as e:
            res = ProblemResult(prob, error=f"{type(e).__name__}: {e}")
            logger.warning("%s failed: %s", prob.name, res.error)
        results.append(res)

    ok = [r for r in results if r.error is None]
    summary = {}
    for name in cfg.models:
        per_problem = [r.summary(name) for r in ok]
        if per_problem:
            summary[name] = aggregate_metrics(per_problem)

    rank = None
    if len(cfg.models) >= 2 and len(ok) >= 2:
        scores = [[getattr(r.summary(m), cfg.rank_metric) for m in cfg.models] for r in ok]
        rank = friedman_nemenyi(scores, cfg.rank_alpha, cfg.models)

    report = BenchmarkReport(cfg, ds.feature_names, ds.n_rows, selected_k, k_table, results, summary, rank)
    if output_dir is not None:
        write_report(report, output_dir, timestamp)
    return report


def write_report(report: BenchmarkReport, output_dir, timestamp: datetime | None = None) -> None:
    out = Path(output_dir)
    (out / "problems").mkdir(parents=True, exist_ok=True)
    cfg = report.config
    (out / "summary.csv").write_text(report.summary_csv(), encoding="utf-8")
    (out / "table.txt").write_text(report.table(), encoding="utf-8")
    for res in report.problems:
        (out / "problems" / f"{res.problem.name}.csv").write_text(_problem_csv(res, cfg.models), encoding="utf-8")
    rank_text = report.rank_test.render() if report.rank_test else "rank test not run (need >= 2 models and >= 2 problems)\n"
    (out / "rank_test.txt").write_text(rank_text, encoding="utf-8")

    ts = (timestamp or datetime.now(timezone.utc)).isoformat(timespec="seconds")
    lines = [
        f"# generated: {ts}",
        "# metrics are computed per fold on definite-labelled test rows, averaged over folds,",
        "# then reported as mean and population std over problems (G-mean likewise per fold).",
        f"individuals: {report.n_individuals}",
        f"features ({len(report.features)}): {', '.join(report.features)}",
        "config:",
    ]
    lines += [f"  {k}: {v}" for k, v in asdict(cfg).items()]
    if report.selected_k is not None:
        lines.append(f"selected K (BIC): {report.selected_k}")
        for K, row in report.k_table.items():
            lines.append(f"  K={K}: loglik={row['loglik']:.6f} n_params={row['n_params']} bic={row['bic']:.6f}")
    lines.append("problems:")
    for res in report.problems:
        c = res.problem.counts
        status = "ok" if res.error is None else f"FAILED {res.error}"
        lines.append(
            f"  {res.problem.name}: {res.problem.describe()} "
            f"[pos={c['positive']} neg={c['negative']} unknown={c['unknown']}; "
            f"tested={sum(res.test_sizes)}] {status}"
        )
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
