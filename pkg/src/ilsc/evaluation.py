"""Train/test protocol, confusion-matrix metrics and the synthetic group experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bayesnet as bn
from .dataset import DataSet
from .errors import DataError, ParameterError
from .speckle import SpeckleParams, generate_speckle
from .texture import featurize_batch

__all__ = [
    "SplitSpec",
    "EvalReport",
    "GroupSpec",
    "ExperimentConfig",
    "Comparison",
    "ExperimentResult",
    "split",
    "evaluate",
    "derive_seed",
    "simulate_group",
    "run_experiment",
]


@dataclass(frozen=True)
class SplitSpec:
    ratio: float = 0.5
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ParameterError("ratio", f"must lie in (0, 1), got {self.ratio!r}")


def split(data: DataSet, spec: SplitSpec = SplitSpec()) -> tuple:
    """Seeded (optionally stratified) partition into ``(train, test)``.

    Within each class (or over all rows when not stratified) the rows are
    shuffled and the first ``ceil(ratio * n)`` go to training. Both parts keep
    the original row order.
    """
    rng = np.random.default_rng(spec.seed)
    n = len(data)
    if spec.stratified:
        if data.labels is None:
            raise DataError("stratified split needs a class column")
        labels = np.array(data.labels)
        groups = [np.flatnonzero(labels == c) for c in data.class_values]
    else:
        groups = [np.arange(n)]
    train_idx = []
    for rows in groups:
        if spec.stratified and rows.size < 2:
            raise DataError(f"class {data.labels[rows[0]]!r} has a single row; cannot stratify")
        shuffled = rng.permutation(rows)
        train_idx.extend(shuffled[: math.ceil(spec.ratio * rows.size)].tolist())
    mask = np.zeros(n, dtype=bool)
    mask[train_idx] = True
    return data.take(np.flatnonzero(mask)), data.take(np.flatnonzero(~mask))


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    tn: int
    positive_class: str
    n_train: int = 0

    @property
    def n_test(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n_test

    @property
    def sensitivity(self) -> float:
        # nan when the test set holds no positives
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else math.nan

    @property
    def specificity(self) -> float:
        return self.tn / (self.tn + self.fp) if self.tn + self.fp else math.nan

    def to_dict(self) -> dict:
        return {
            "positive_class": self.positive_class,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
            "n_train": self.n_train,
            "n_test": self.n_test,
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
        }


def evaluate(net: bn.BayesNet, test: DataSet, positive_class: str, n_train: int = 0) -> EvalReport:
    """Classify every test row and tally a one-vs-rest confusion matrix."""
    if len(test) == 0:
        raise DataError("test set is empty")
    if test.labels is None:
        raise DataError("test set needs a class column")
    if positive_class not in net.class_values:
        raise ParameterError("positive_class", f"{positive_class!r} is not one of {net.class_values}")
    tp = fp = fn = tn = 0
    for truth, guess in zip(test.labels, bn.predict(net, test)):
        if guess == positive_class:
            if truth == positive_class:
                tp += 1
            else:
                fp += 1
        elif truth == positive_class:
            fn += 1
        else:
            tn += 1
    return EvalReport(tp, fp, fn, tn, positive_class, n_train)


# experiment runner

_GROUP_KEYS = {"name", "source", "params", "path"}
_SIM_KEYS = {
    "mode", "width", "height", "n", "pupil_radius", "blur_sigma",
    "blur_sigma_ramp", "count", "pixel_pitch_um", "wavelength_nm",
}
_CONFIG_KEYS = {
    "format_version", "groups", "seed", "split_ratio", "t", "bins", "method",
    "positive_class", "significance", "alpha", "roi_size", "stride", "comparisons",
}
CONFIG_FORMAT_VERSION = 1


def _strict(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise DataError(f"{where}: expected an object")
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise DataError(f"{where}: unknown keys {unknown}")


@dataclass(frozen=True)
class GroupSpec:
    """One subject group, either simulated or read from a feature CSV.

    Simulation parameters mirror :class:`SpeckleParams` plus ``count``
    (images per group, default 20) and ``blur_sigma_ramp`` = ``[start, end]``,
    which spaces the blur linearly across the group's images in order.
    """

    name: str
    source: str = "simulate"
    params: dict = field(default_factory=dict)
    path: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "GroupSpec":
        _strict(d, _GROUP_KEYS, "group")
        if "name" not in d:
            raise DataError("group: missing 'name'")
        source = d.get("source", "simulate")
        if source == "simulate":
            params = d.get("params", {})
            _strict(params, _SIM_KEYS, f"group {d['name']!r} params")
            return cls(str(d["name"]), source, dict(params))
        if source == "csv":
            if "path" not in d:
                raise DataError(f"group {d['name']!r}: csv source needs 'path'")
            return cls(str(d["name"]), source, {}, str(d["path"]))
        raise DataError(f"group {d['name']!r}: source must be 'simulate' or 'csv'")

    def to_dict(self) -> dict:
        d = {"name": self.name, "source": self.source}
        if self.source == "simulate":
            d["params"] = dict(self.params)
        else:
            d["path"] = self.path
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    groups: tuple
    seed: int = 0
    split_ratio: float = 0.5
    t: float = bn.DEFAULT_T
    bins: int = 3
    method: str = "eqfreq"
    positive_class: str | None = None
    significance: float | None = bn.DEFAULT_SIGNIFICANCE
    alpha: float = 1.0
    roi_size: int = 30
    stride: int = 5
    comparisons: tuple | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _strict(d, _CONFIG_KEYS, "config")
        version = d.get("format_version", CONFIG_FORMAT_VERSION)
        if version != CONFIG_FORMAT_VERSION:
            raise DataError(f"config: unsupported format_version {version!r}")
        if "groups" not in d or not d["groups"]:
            raise DataError("config: 'groups' must list at least two groups")
        kw = {k: v for k, v in d.items() if k not in ("groups", "format_version", "comparisons")}
        comparisons = d.get("comparisons")
        if comparisons is not None:
            comparisons = tuple(tuple(map(str, pair)) for pair in comparisons)
        cfg = cls(tuple(GroupSpec.from_dict(g) for g in d["groups"]), comparisons=comparisons, **kw)
        cfg.validate()
        return cfg

    def validate(self):
        names = [g.name for g in self.groups]
        if len(names) < 2:
            raise DataError("config: need at least two groups")
        if len(set(names)) != len(names):
            raise DataError(f"config: duplicate group names {names}")
        for pair in self.comparisons or ():
            if len(pair) != 2 or not set(pair) <= set(names) or pair[0] == pair[1]:
                raise DataError(f"config: bad comparison {pair!r}")
        bn.Method(self.method)
        SplitSpec(self.split_ratio)

    def to_dict(self) -> dict:
        d = {
            "format_version": CONFIG_FORMAT_VERSION,
            "groups": [g.to_dict() for g in self.groups],
            "seed": self.seed,
            "split_ratio": self.split_ratio,
            "t": self.t,
            "bins": self.bins,
            "method": self.method,
            "positive_class": self.positive_class,
            "significance": self.significance,
            "alpha": self.alpha,
            "roi_size": self.roi_size,
            "stride": self.stride,
        }
        if self.comparisons is not None:
            d["comparisons"] = [list(p) for p in self.comparisons]
        return d

    def pairs(self) -> list:
        if self.comparisons is not None:
            return list(self.comparisons)
        names = [g.name for g in self.groups]
        return [(names[i], names[j]) for i in range(len(names)) for j in range(i + 1, len(names))]


def derive_seed(*keys: int) -> int:
    """Stable 64-bit seed from a tuple of nonnegative integers."""
    words = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def simulate_group(spec: GroupSpec, seed: int, group_index: int) -> list:
    """Images for one simulated group; image ``i`` uses ``derive_seed(seed, group_index, i)``."""
    p = dict(spec.params)
    count = int(p.pop("count", 20))
    ramp = p.pop("blur_sigma_ramp", None)
    if count < 1:
        raise ParameterError("count", f"must be >= 1, got {count}")
    if ramp is not None:
        if len(ramp) != 2:
            raise ParameterError("blur_sigma_ramp", "expected [start, end]")
        sigmas = np.linspace(float(ramp[0]), float(ramp[1]), count)
    else:
        sigmas = np.full(count, float(p.pop("blur_sigma", 0.0)))
    p.pop("blur_sigma", None)
    p.setdefault("width", 128)
    p.setdefault("height", 128)
    return [
        generate_speckle(
            SpeckleParams(**p, blur_sigma=float(sigmas[i]), seed=derive_seed(seed, group_index, i))
        )
        for i in range(count)
    ]


@dataclass(frozen=True)
class Comparison:
    positive: str
    negative: str
    model: bn.BayesNet
    report: EvalReport

    @property
    def name(self) -> str:
        return f"{self.positive}_vs_{self.negative}"


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    groups: dict
    comparisons: tuple
    pooled: DataSet
    skeleton: bn.Skeleton
    links: bn.LinkReport
    group_links: dict


def _link_run(data: DataSet, cfg: ExperimentConfig) -> tuple:
    spec = bn.fit_discretization(data, cfg.method, cfg.bins)
    return bn.discover_links(bn.apply_discretization(spec, data), cfg.t, cfg.significance)


def run_experiment(config: ExperimentConfig, datasets: dict | None = None) -> ExperimentResult:
    """Pairwise group classifications plus progress-link discovery.

    ``datasets`` supplies the feature table for every ``csv`` group (the
    caller does the file reading). Progress runs 1..N over all groups in
    configuration order. Besides the pooled link search, each group is
    searched on its own rows so drift confined to one group can be told apart
    from differences between groups.
    """
    config.validate()
    datasets = datasets or {}
    groups = {}
    for gi, g in enumerate(config.groups):
        if g.source == "simulate":
            images = simulate_group(g, config.seed, gi)
            groups[g.name] = featurize_batch(images, g.name, False, config.roi_size, config.stride)
        else:
            if g.name not in datasets:
                raise DataError(f"no feature table supplied for csv group {g.name!r}")
            d = datasets[g.name]
            groups[g.name] = DataSet(d.attribute_names, d.values, (g.name,) * len(d))
    sizes = {name: len(d) for name, d in groups.items()}
    if len(set(sizes.values())) != 1:
        raise DataError(f"group size mismatch: {sizes}")

    comparisons = []
    for pos, neg in config.pairs():
        if config.positive_class in (pos, neg) and config.positive_class != pos:
            pos, neg = neg, pos
        data = DataSet.concat([groups[pos], groups[neg]])
        train_set, test_set = split(data, SplitSpec(config.split_ratio, True, config.seed))
        model = bn.train(train_set, config.t, config.bins, config.method, config.significance, config.alpha)
        report = evaluate(model, test_set, pos, n_train=len(train_set))
        comparisons.append(Comparison(pos, neg, model, report))

    pooled = DataSet.concat(groups.values())
    pooled = pooled.with_progress(np.arange(1, len(pooled) + 1))
    skeleton, links = _link_run(pooled, config)
    group_links = {}
    offset = 0
    for name, d in groups.items():
        part = pooled.take(np.arange(offset, offset + len(d)))
        group_links[name] = _link_run(part, config)[1]
        offset += len(d)
    return ExperimentResult(config, groups, tuple(comparisons), pooled, skeleton, links, group_links)
