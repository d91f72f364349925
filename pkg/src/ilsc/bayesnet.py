"""Discretization, conditional mutual information and thresholded Bayesian networks.

All information quantities are in bits. Two variables are declared dependent
(given a conditioning set) when their conditional mutual information exceeds
the link threshold ``t`` *and*, unless ``significance`` is ``None``, the
likelihood-ratio statistic ``G = 2 * n * ln(2) * I`` rejects conditional
independence at that level. The second condition guards against the
finite-sample upward bias of plug-in MI on small tables, which otherwise
dwarfs thresholds of a few hundredths of a bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, NamedTuple

import numpy as np
from scipy import stats

from .dataset import DataSet
from .errors import DataError, ParameterError

__all__ = [
    "Method",
    "DiscretizationSpec",
    "DiscreteData",
    "BayesNet",
    "Skeleton",
    "LinkReport",
    "DependenceTest",
    "DEFAULT_T",
    "DEFAULT_SIGNIFICANCE",
    "fit_discretization",
    "apply_discretization",
    "cmi",
    "entropy",
    "dependence",
    "learn_classifier_structure",
    "fit_cpts",
    "classify",
    "train",
    "predict",
    "discover_links",
]

CLASS = "class"
PROGRESS = "progress"
DEFAULT_T = 0.01
DEFAULT_SIGNIFICANCE = 0.001
FORMAT_VERSION = 1


class Method(str, enum.Enum):
    EQUAL_FREQUENCY = "eqfreq"
    EQUAL_WIDTH = "eqwidth"


@dataclass(frozen=True)
class DiscretizationSpec:
    method: Method
    bins: int
    cut_points: Mapping[str, tuple]

    def arity(self, name: str) -> int:
        return len(self.cut_points[name]) + 1


def _equal_frequency_cuts(values: np.ndarray, k: int) -> list:
    s = np.sort(values)
    n = s.size
    cuts = set()
    for i in range(1, k):
        m = min(max(int(math.floor(i * n / k + 0.5)), 1), n - 1)
        if s[m - 1] < s[m]:
            cuts.add((s[m - 1] + s[m]) / 2)
            continue
        # m falls inside a run of tied values: move to the nearer edge of the run
        v = s[m]
        lo = int(np.searchsorted(s, v, side="left"))
        hi = int(np.searchsorted(s, v, side="right"))
        options = []
        if lo > 0:
            options.append((m - lo, 1, (s[lo - 1] + v) / 2))
        if hi < n:
            options.append((hi - m, 0, (v + s[hi]) / 2))
        if options:
            cuts.add(min(options)[2])
    return sorted(float(c) for c in cuts)


def _equal_width_cuts(values: np.ndarray, k: int) -> list:
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return []
    return [lo + i * (hi - lo) / k for i in range(1, k)]


def fit_discretization(
    data: DataSet, method: Method | str = Method.EQUAL_FREQUENCY, bins: int = 3
) -> DiscretizationSpec:
    """Learn per-attribute cut points (progress included when present).

    Equal-frequency cuts sit midway between the order statistics either side
    of each ``i/k`` quantile position; when that position falls inside a run
    of tied values the cut moves to the nearer edge of the run. Equal-width
    cuts split ``[min, max]`` into ``bins`` intervals. Constant columns get no
    cuts.
    """
    method = Method(method)
    if int(bins) != bins or bins < 2:
        raise ParameterError("bins", f"must be an integer >= 2, got {bins!r}")
    if len(data) == 0:
        raise DataError("cannot fit a discretization on an empty dataset")
    if len(data) < bins:
        raise DataError(f"need at least {bins} rows for {bins} bins, got {len(data)}")
    names = list(data.attribute_names)
    if data.progress is not None:
        names.append(PROGRESS)
    rule = _equal_frequency_cuts if method is Method.EQUAL_FREQUENCY else _equal_width_cuts
    cuts = {name: tuple(rule(data.column(name), bins)) for name in names}
    return DiscretizationSpec(method, int(bins), cuts)


def _bin(cuts, values) -> np.ndarray:
    # a value equal to a cut point belongs to the bin above it
    return np.searchsorted(np.asarray(cuts, dtype=np.float64), values, side="right")


@dataclass(frozen=True, eq=False)
class DiscreteData:
    """Integer-coded table over named nodes.

    ``codes[:, j]`` lies in ``range(arity[j])``. The class node, when present,
    codes labels by their index in ``class_values``.
    """

    names: tuple
    codes: np.ndarray
    arity: tuple
    class_values: tuple = ()
    spec: DiscretizationSpec | None = None

    def __len__(self):
        return self.codes.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.codes[:, self.names.index(name)]
        except ValueError:
            raise DataError(f"unknown attribute {name!r}") from None

    def arity_of(self, name: str) -> int:
        return self.arity[self.names.index(name)]

    @classmethod
    def from_columns(cls, columns: Mapping[str, "np.ndarray | list"], class_values=()):
        """Build directly from integer columns; arities are ``max + 1``."""
        names = tuple(columns)
        codes = np.column_stack([np.asarray(columns[n], dtype=np.int64) for n in names])
        arity = tuple(int(codes[:, j].max()) + 1 if len(codes) else 1 for j in range(len(names)))
        if class_values and CLASS in names:
            arity = tuple(
                len(class_values) if n == CLASS else a for n, a in zip(names, arity)
            )
        return cls(names, codes, arity, tuple(class_values))


def apply_discretization(
    spec: DiscretizationSpec, data: DataSet, class_values=None
) -> DiscreteData:
    """Bin every attribute named in ``spec`` and code the class column.

    ``bin id`` is the number of cut points less than or equal to the value.
    Rows keep their order. ``class_values`` fixes the label coding (defaults
    to the sorted labels present in ``data``).
    """
    names, cols, arity = [], [], []
    for name in spec.cut_points:
        if name == PROGRESS and data.progress is None:
            continue
        values = data.column(name)
        names.append(name)
        cols.append(_bin(spec.cut_points[name], values))
        arity.append(spec.arity(name))
    classes = ()
    if data.labels is not None:
        classes = tuple(class_values) if class_values is not None else data.class_values
        index = {c: i for i, c in enumerate(classes)}
        try:
            cols.append(np.array([index[c] for c in data.labels], dtype=np.int64))
        except KeyError as exc:
            raise DataError(f"class label {exc.args[0]!r} unknown to the model") from None
        names.append(CLASS)
        arity.append(max(len(classes), 1))
    codes = np.column_stack(cols).astype(np.int64) if cols else np.zeros((len(data), 0), np.int64)
    codes.setflags(write=False)
    return DiscreteData(tuple(names), codes, tuple(arity), classes, spec)


def _compress(data: DiscreteData, given) -> tuple:
    """Collapse a conditioning set into one code column with dense labels."""
    if not given:
        return np.zeros(len(data), dtype=np.int64), 1
    cols = np.column_stack([data.column(g) for g in given])
    _, inverse = np.unique(cols, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    return inverse, int(inverse.max()) + 1


def _table(data: DiscreteData, x: str, y: str, given=()) -> np.ndarray:
    cx, cy = data.column(x), data.column(y)
    ax, ay = data.arity_of(x), data.arity_of(y)
    cz, nz = _compress(data, tuple(given))
    idx = (cz * ax + cx) * ay + cy
    return np.bincount(idx, minlength=nz * ax * ay).reshape(nz, ax, ay).astype(np.float64)


def _cmi_from_table(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    n_z = counts.sum(axis=(1, 2), keepdims=True)
    n_xz = counts.sum(axis=2, keepdims=True)
    n_yz = counts.sum(axis=1, keepdims=True)
    nz = counts > 0
    num = (counts * n_z)[nz]
    den = (n_xz * n_yz * np.ones_like(counts))[nz]
    value = float(np.sum(counts[nz] / n * np.log2(num / den)))
    # exact arithmetic is nonnegative; only rounding can push it below zero
    return max(value, 0.0)


def cmi(data: DiscreteData, x: str, y: str, given=()) -> float:
    """Empirical conditional mutual information ``I(x; y | given)`` in bits.

    With an empty conditioning set this is plain mutual information. Cells
    with zero joint count contribute nothing.
    """
    for name in (x, y, *given):
        if name not in data.names:
            raise DataError(f"unknown attribute {name!r}")
    return _cmi_from_table(_table(data, x, y, given))


def entropy(data: DiscreteData, x: str) -> float:
    """Empirical entropy of one node in bits."""
    counts = np.bincount(data.column(x)).astype(np.float64)
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log2(p)))


class DependenceTest(NamedTuple):
    score: float
    statistic: float
    df: int
    p_value: float
    dependent: bool


def dependence(
    data: DiscreteData,
    x: str,
    y: str,
    given=(),
    t: float = DEFAULT_T,
    significance: float | None = DEFAULT_SIGNIFICANCE,
) -> DependenceTest:
    """Threshold-plus-G-test decision on conditional dependence.

    Degrees of freedom are summed over observed strata of the conditioning
    set, counting only the levels of ``x`` and ``y`` seen in each stratum.
    """
    counts = _table(data, x, y, given)
    score = _cmi_from_table(counts)
    n = counts.sum()
    statistic = 2.0 * n * math.log(2.0) * score
    rx = (counts.sum(axis=2) > 0).sum(axis=1)
    ry = (counts.sum(axis=1) > 0).sum(axis=1)
    df = int(np.sum(np.clip(rx - 1, 0, None) * np.clip(ry - 1, 0, None)))
    p_value = float(stats.chi2.sf(statistic, df)) if df > 0 else 1.0
    dependent = score > t
    if significance is not None:
        dependent = dependent and df > 0 and p_value < significance
    return DependenceTest(score, statistic, df, p_value, bool(dependent))


@dataclass(frozen=True, eq=False)
class BayesNet:
    """Selective tree-augmented naive Bayes classifier.

    ``parents`` maps every node in the network (the class node and each
    selected attribute) to its parent tuple; the class node comes first in
    every attribute's parent tuple. ``cpts[node]`` has one axis per parent
    (in order) followed by the node's own axis.
    """

    attributes: tuple
    class_values: tuple
    parents: Mapping[str, tuple]
    discretization: DiscretizationSpec
    t: float
    significance: float | None
    alpha: float = 1.0
    cpts: Mapping[str, np.ndarray] | None = None
    class_scores: Mapping[str, float] = field(default_factory=dict)

    @property
    def selected(self) -> tuple:
        return tuple(a for a in self.attributes if a in self.parents)

    @property
    def edges(self) -> list:
        return [(p, child) for child in self.nodes for p in self.parents[child]]

    @property
    def nodes(self) -> tuple:
        return (CLASS,) + self.selected

    def arity(self, node: str) -> int:
        if node == CLASS:
            return len(self.class_values)
        return self.discretization.arity(node)

    def topological_order(self) -> list:
        order, done = [], set()
        pending = list(self.nodes)
        while pending:
            progressed = False
            for node in list(pending):
                if all(p in done for p in self.parents[node]):
                    order.append(node)
                    done.add(node)
                    pending.remove(node)
                    progressed = True
            if not progressed:
                raise DataError(f"network has a cycle among {pending}")
        return order


def learn_classifier_structure(
    data: DiscreteData,
    t: float = DEFAULT_T,
    significance: float | None = DEFAULT_SIGNIFICANCE,
) -> BayesNet:
    """Select class-dependent attributes, then add at most one attribute parent each.

    An attribute is selected when it depends on the class. Among selected
    attributes, ``a -> b`` is a candidate when ``a`` ranks above ``b`` (higher
    MI with the class, earlier attribute on ties) and ``a`` and ``b`` are
    dependent given the class; ``b`` keeps the candidate with the largest
    conditional MI.
    """
    if CLASS not in data.names:
        raise DataError("classifier structure learning needs a class column")
    present = np.unique(data.column(CLASS))
    if present.size < 2:
        raise DataError("training data contains a single class")
    if data.spec is None:
        raise DataError("discrete data carries no discretization spec")
    attributes = tuple(n for n in data.names if n not in (CLASS, PROGRESS))
    scores, selected = {}, []
    for a in attributes:
        test = dependence(data, a, CLASS, (), t, significance)
        scores[a] = test.score
        if test.dependent:
            selected.append(a)
    rank = {a: (-scores[a], i) for i, a in enumerate(attributes)}
    parents = {CLASS: ()}
    for b in selected:
        best = None
        for a in selected:
            if a == b or rank[a] > rank[b]:
                continue
            test = dependence(data, a, b, (CLASS,), t, significance)
            if test.dependent and (best is None or test.score > best[0]):
                best = (test.score, a)
        parents[b] = (CLASS,) if best is None else (CLASS, best[1])
    return BayesNet(
        attributes=attributes,
        class_values=data.class_values,
        parents=parents,
        discretization=data.spec,
        t=float(t),
        significance=significance,
        class_scores=scores,
    )


def fit_cpts(net: BayesNet, data: DiscreteData, alpha: float | None = None) -> BayesNet:
    """Laplace-smoothed maximum-likelihood tables: ``(count + a) / (total + a * arity)``."""
    alpha = net.alpha if alpha is None else float(alpha)
    if not alpha > 0:
        raise ParameterError("alpha", f"must be > 0, got {alpha!r}")
    cpts = {}
    for node in net.nodes:
        family = net.parents[node] + (node,)
        shape = tuple(net.arity(v) for v in family)
        idx = np.zeros(len(data), dtype=np.int64)
        for v, size in zip(family, shape):
            idx = idx * size + data.column(v)
        counts = np.bincount(idx, minlength=int(np.prod(shape))).reshape(shape).astype(np.float64)
        table = (counts + alpha) / (counts.sum(axis=-1, keepdims=True) + alpha * shape[-1])
        table.setflags(write=False)
        cpts[node] = table
    return replace(net, cpts=cpts, alpha=alpha)


def classify(net: BayesNet, instance: Mapping[str, float]) -> tuple:
    """Posterior over classes for one row of raw (undiscretized) values.

    Returns ``(label, posterior)`` where ``posterior`` is a dict in
    ``class_values`` order. Exact ties go to the lexicographically first label.
    """
    if net.cpts is None:
        raise DataError("network has no fitted CPTs")
    codes = {}
    for a in net.selected:
        if a not in instance:
            raise DataError(f"instance is missing selected attribute {a!r}")
        codes[a] = int(_bin(net.discretization.cut_points[a], float(instance[a])))
    joint = np.array(net.cpts[CLASS], dtype=np.float64)
    for a in net.selected:
        table = net.cpts[a]
        rest = [codes[p] for p in net.parents[a][1:]]
        joint = joint * table[(slice(None), *rest, codes[a])]
    posterior = joint / joint.sum()
    best = int(np.argmax(posterior))
    return net.class_values[best], dict(zip(net.class_values, (float(p) for p in posterior)))


def train(
    data: DataSet,
    t: float = DEFAULT_T,
    bins: int = 3,
    method: Method | str = Method.EQUAL_FREQUENCY,
    significance: float | None = DEFAULT_SIGNIFICANCE,
    alpha: float = 1.0,
) -> BayesNet:
    """Discretize on ``data``, learn the structure and fit the tables."""
    if data.labels is None:
        raise DataError("training data needs a class column")
    plain = DataSet(data.attribute_names, data.values, data.labels)
    spec = fit_discretization(plain, method, bins)
    discrete = apply_discretization(spec, plain)
    net = learn_classifier_structure(discrete, t, significance)
    return fit_cpts(replace(net, alpha=float(alpha)), discrete)


def predict(net: BayesNet, data: DataSet) -> list:
    return [classify(net, data.row(i))[0] for i in range(len(data))]


@dataclass(frozen=True)
class Skeleton:
    """Undirected dependency graph; ``edges`` holds node pairs in node order."""

    nodes: tuple
    edges: tuple
    scores: Mapping[tuple, float]

    def neighbors(self, node: str) -> set:
        return {b if a == node else a for a, b in self.edges if node in (a, b)}

    def has_edge(self, a: str, b: str) -> bool:
        i, j = sorted((self.nodes.index(a), self.nodes.index(b)))
        return (self.nodes[i], self.nodes[j]) in self.edges


@dataclass(frozen=True)
class LinkReport:
    tested_attribute: str
    incident_edges: tuple  # (attribute, score in bits, p-value)
    t: float

    @property
    def verdict(self) -> bool:
        return bool(self.incident_edges)

    @property
    def linked(self) -> tuple:
        return tuple(e[0] for e in self.incident_edges)


def discover_links(
    data: DiscreteData,
    t: float = DEFAULT_T,
    significance: float | None = DEFAULT_SIGNIFICANCE,
    tested: str = PROGRESS,
) -> tuple:
    """Draft / thicken / thin skeleton search; report edges touching ``tested``.

    Drafting keeps the dependent edges of a maximum-MI spanning tree.
    Thickening visits the remaining marginally dependent pairs by decreasing
    MI and adds each one that stays dependent given its current common
    neighbours. Thinning then drops every edge whose endpoints are
    independent given their common neighbours in the thickened graph.
    """
    if tested not in data.names:
        raise DataError(f"dataset has no {tested} column")
    nodes = data.names
    order = {v: i for i, v in enumerate(nodes)}
    pairs = [(nodes[i], nodes[j]) for i in range(len(nodes)) for j in range(i + 1, len(nodes))]
    marginal = {p: dependence(data, *p, (), t, significance) for p in pairs}
    ranked = sorted(pairs, key=lambda p: (-marginal[p].score, order[p[0]], order[p[1]]))

    # drafting
    root = {v: v for v in nodes}

    def find(v):
        while root[v] != v:
            root[v] = root[root[v]]
            v = root[v]
        return v

    tree, edges = set(), set()
    for a, b in ranked:
        ra, rb = find(a), find(b)
        if ra != rb:
            root[ra] = rb
            tree.add((a, b))
            if marginal[(a, b)].dependent:
                edges.add((a, b))

    def common(a, b, graph):
        na = {y if x == a else x for x, y in graph if a in (x, y)}
        nb = {y if x == b else x for x, y in graph if b in (x, y)}
        return tuple(sorted((na & nb) - {a, b}, key=order.get))

    # thickening
    for a, b in ranked:
        if (a, b) in tree or not marginal[(a, b)].dependent:
            continue
        if dependence(data, a, b, common(a, b, edges), t, significance).dependent:
            edges.add((a, b))

    # thinning
    thick = frozenset(edges)
    kept, scores, pvals = [], {}, {}
    for a, b in sorted(thick, key=lambda p: (order[p[0]], order[p[1]])):
        test = dependence(data, a, b, common(a, b, thick), t, significance)
        if test.dependent:
            kept.append((a, b))
            scores[(a, b)] = test.score
            pvals[(a, b)] = test.p_value

    skeleton = Skeleton(nodes, tuple(kept), scores)
    incident = tuple(
        (b if a == tested else a, scores[(a, b)], pvals[(a, b)])
        for a, b in kept
        if tested in (a, b)
    )
    return skeleton, LinkReport(tested, incident, float(t))
