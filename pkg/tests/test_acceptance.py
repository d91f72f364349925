"""Acceptance criteria 1-11, one test each; every test prints a PASS/FAIL line."""

import itertools
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from ilsc import bayesnet as bn
from ilsc import io
from ilsc.cli import main
from ilsc.evaluation import ExperimentConfig, SplitSpec, evaluate, run_experiment, split
from ilsc.speckle import Mode, SpeckleParams, contrast, generate_speckle
from ilsc.texture import FEATURE_NAMES, Roi, texture_features

from conftest import progress_dataset, separable_dataset
from oracles import (
    cmi_bruteforce,
    compositions,
    entropy_bruteforce,
    equal_frequency_cuts,
    naive_features,
)

pytestmark = pytest.mark.slow


def test_c01_fully_developed_contrast(criterion):
    start = time.perf_counter()
    ks = []
    for seed in range(10):
        img = generate_speckle(SpeckleParams(512, 512, mode=Mode.PHASOR, n=1000, seed=seed))
        ks.append(contrast(img).contrast)
    elapsed = time.perf_counter() - start
    ok = all(0.95 <= k <= 1.05 for k in ks) and elapsed < 10.0
    criterion(1, ok, f"K in [{min(ks):.4f}, {max(ks):.4f}] over 10 seeds, {elapsed:.2f} s")


def test_c02_blur_monotonicity(criterion):
    start = time.perf_counter()
    rows, ok = [], True
    for seed in range(3):
        ks = [
            contrast(generate_speckle(SpeckleParams(256, 256, blur_sigma=s, seed=seed))).contrast
            for s in (0.0, 1.0, 2.0, 4.0)
        ]
        ok &= all(a - b > 0.02 for a, b in zip(ks, ks[1:]))
        rows.append("/".join(f"{k:.3f}" for k in ks))
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10.0
    criterion(2, ok, f"K(sigma=0/1/2/4) = {'; '.join(rows)}, {elapsed:.2f} s")


def test_c03_texture_oracle(criterion):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for seed in range(10):
        img = generate_speckle(SpeckleParams(96, 96, pupil_radius=rng.uniform(0.1, 0.5), seed=seed))
        x, y = rng.integers(0, 96 - 30, size=2)
        roi = Roi(int(x), int(y), 30, img)
        got = texture_features(roi).as_array()
        want = np.array(naive_features(roi.pixels))
        worst = max(worst, float(np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want)))))
    constant_ok = True
    for c in (0.0, 1.0, 3.7, 1e6):
        v = texture_features(Roi.whole(np.full((30, 30), c))).as_array()
        constant_ok &= v[0] == c and np.all(v[1:] == 0.0)
    criterion(3, worst <= 1e-10 and constant_ok, f"max deviation {worst:.2e}, constant ROI exact: {constant_ok}")


def test_c04_texture_invariances(criterion):
    shift_dev, scale_dev = 0.0, 0.0
    for seed in range(10):
        img = generate_speckle(SpeckleParams(30, 30, seed=100 + seed))
        base = texture_features(Roi.whole(img.intensities)).as_array()
        for shift in (0.5, 7.0, 250.0):
            moved = texture_features(Roi.whole(img.intensities + shift)).as_array()
            shift_dev = max(shift_dev, abs(moved[0] - base[0] - shift))
            shift_dev = max(shift_dev, float(np.max(np.abs(moved[1:] - base[1:]))))
        for scale in (0.01, 3.0, 1e4):
            scaled = texture_features(Roi.whole(img.intensities * scale)).as_array()
            scale_dev = max(scale_dev, abs(scaled[3] - base[3]), abs(scaled[7] - base[7]))
    ok = shift_dev <= 1e-9 and scale_dev <= 1e-9
    criterion(4, ok, f"shift moves only t1 (max dev {shift_dev:.1e}), skewness scale dev {scale_dev:.1e}")


def _rows(shape, counts):
    cells = [cell for cell, c in zip(itertools.product(*map(range, shape)), counts) for _ in range(c)]
    return [list(col) for col in zip(*cells)]


def test_c05_cmi_oracle(criterion):
    suites = [((2, 2), 5), ((3, 3), 3), ((2, 3), 4), ((2, 2, 2), 4), ((3, 2, 3), 2)]
    worst, cases = 0.0, 0
    for shape, total in suites:
        for counts in compositions(total, int(np.prod(shape))):
            cols = _rows(shape, counts)
            names = ["x", "y", "z"][: len(shape)]
            data = bn.DiscreteData.from_columns(dict(zip(names, cols)))
            given = ("z",) if len(shape) == 3 else ()
            got = bn.cmi(data, "x", "y", given)
            want = cmi_bruteforce(cols[0], cols[1], cols[2] if given else None)
            worst = max(worst, abs(got - want))
            cases += 1

    independent_ok = True
    products = [((1, 1), (1, 2)), ((2, 1, 3), (1, 1)), ((1, 3), (2, 2, 1))]
    tables = []
    for px, py in products:
        counts = [a * b for a, b in itertools.product(px, py)]
        tables.append(_rows((len(px), len(py)), counts))
        data = bn.DiscreteData.from_columns({"x": tables[-1][0], "y": tables[-1][1]})
        independent_ok &= bn.cmi(data, "x", "y") == 0.0
    # each stratum of z holds its own product table, so X and Y are independent given Z
    # while the pooled pair is dependent
    for a, b in itertools.combinations(tables, 2):
        z = [0] * len(a[0]) + [1] * len(b[0])
        data = bn.DiscreteData.from_columns({"x": a[0] + b[0], "y": a[1] + b[1], "z": z})
        independent_ok &= bn.cmi(data, "x", "y", ("z",)) == 0.0

    self_dev = 0.0
    for counts in compositions(6, 3):
        xs = [v for v, c in enumerate(counts) for _ in range(c)]
        data = bn.DiscreteData.from_columns({"x": xs, "x2": xs})
        self_dev = max(self_dev, abs(bn.cmi(data, "x", "x2") - bn.entropy(data, "x")))
        self_dev = max(self_dev, abs(bn.entropy(data, "x") - entropy_bruteforce(xs)))

    ok = cases >= 50 and worst <= 1e-12 and independent_ok and self_dev <= 1e-12
    criterion(
        5,
        ok,
        f"{cases} distributions, max |cmi - oracle| {worst:.1e}, independence exact: {independent_ok}, "
        f"|MI(X;X) - H(X)| {self_dev:.1e}",
    )


def _clean_run(seed):
    train, test = split(separable_dataset(seed), SplitSpec(0.5, True, seed))
    net = bn.train(train, t=0.05, bins=2)
    return net.selected, evaluate(net, test, "S").accuracy


def test_c06_classifier_sanity(criterion):
    # the verdict uses the canonical dataset (seed 0); other seeds are reported only
    selected, accuracy = _clean_run(0)
    clean_ok = selected == ("t5",) and accuracy == 1.0
    others = [_clean_run(seed) for seed in range(1, 10)]
    exact = sum(sel == ("t5",) and acc == 1.0 for sel, acc in others)

    accs = []
    for seed in range(20):
        train, test = split(separable_dataset(seed, permute=True), SplitSpec(0.5, True, seed))
        accs.append(evaluate(bn.train(train, t=0.05, bins=2), test, "S").accuracy)
    within = sum(0.3 <= a <= 0.7 for a in accs)
    ok = clean_ok and within >= 18
    criterion(
        6,
        ok,
        f"selected {selected}, test accuracy {accuracy}; permuted labels: accuracy in [0.3, 0.7] for "
        f"{within}/20 seeds (info: exact single-feature selection on {exact}/9 further datasets)",
    )


def _oracle_mi(feature, progress, bins=3):
    fx, _ = equal_frequency_cuts(feature.tolist(), bins)
    fp, _ = equal_frequency_cuts(progress.tolist(), bins)
    return cmi_bruteforce(fx, fp)


def test_c07_link_discovery(criterion):
    t, inject = bn.DEFAULT_T, 8
    found, false_links, min_mi = 0, 0, np.inf
    for seed in range(20):
        data = progress_dataset(seed, inject=inject)
        min_mi = min(min_mi, _oracle_mi(data.values[:, inject], data.progress))
        disc = bn.apply_discretization(bn.fit_discretization(data, "eqfreq", 3), data)
        _, report = bn.discover_links(disc, t=t)
        found += FEATURE_NAMES[inject] in report.linked

        shuffled = progress_dataset(seed, inject=inject, shuffle=True)
        disc = bn.apply_discretization(bn.fit_discretization(shuffled, "eqfreq", 3), shuffled)
        _, report = bn.discover_links(disc, t=t)
        false_links += report.verdict
    ok = min_mi > t and found >= 19 and 20 - false_links >= 19
    criterion(
        7,
        ok,
        f"oracle MI >= {min_mi:.3f} bits > t={t}; injected edge found {found}/20; "
        f"shuffled progress edge-free {20 - false_links}/20",
    )


def _group(name, **params):
    return {"name": name, "params": {"count": 20, **params}}


def test_c08_end_to_end_groups(criterion):
    start = time.perf_counter()
    separable, identical = [], []
    for seed in range(5):
        cfg = ExperimentConfig.from_dict(
            {"groups": [_group("S", pupil_radius=0.15), _group("EM", pupil_radius=0.25)], "seed": seed}
        )
        separable.append(run_experiment(cfg).comparisons[0].report.accuracy)
        cfg = ExperimentConfig.from_dict(
            {"groups": [_group("S", pupil_radius=0.2), _group("EM", pupil_radius=0.2)], "seed": seed}
        )
        identical.append(run_experiment(cfg).comparisons[0].report.accuracy)
    elapsed = time.perf_counter() - start
    hi = sum(a >= 0.85 for a in separable)
    lo = sum(a <= 0.65 for a in identical)
    ok = hi >= 4 and lo >= 4 and elapsed < 120.0
    criterion(
        8,
        ok,
        f"0.15 vs 0.25 accuracy {separable} ({hi}/5 >= 0.85); identical {identical} ({lo}/5 <= 0.65); "
        f"{elapsed:.1f} s",
    )


def drift_config(seed):
    ramp = {"pupil_radius": 0.2, "blur_sigma_ramp": [0.0, 2.0]}
    return ExperimentConfig.from_dict(
        {
            "groups": [_group("S", **ramp), _group("A", **ramp), _group("EM", pupil_radius=0.2)],
            "seed": seed,
        }
    )


def test_c09_progress_links(criterion):
    passed, notes = 0, []
    for seed in range(5):
        result = run_experiment(drift_config(seed))
        assert result.pooled.progress.tolist() == list(range(1, 61))
        drift_ok = True
        for name in ("S", "A"):
            report = result.group_links[name]
            group = result.groups[name]
            order = np.arange(1, len(group) + 1)
            drifting = {
                f for f in FEATURE_NAMES if abs(spearmanr(group.column(f), order).statistic) >= 0.5
            }
            drift_ok &= report.verdict and set(report.linked) <= drifting
        control_ok = not result.group_links["EM"].verdict
        pooled_ok = result.links.verdict
        passed += drift_ok and control_ok and pooled_ok
        notes.append(
            f"S:{','.join(result.group_links['S'].linked) or '-'} "
            f"A:{','.join(result.group_links['A'].linked) or '-'} "
            f"EM:{','.join(result.group_links['EM'].linked) or '-'}"
        )
    criterion(9, passed >= 4, f"{passed}/5 seeds; links per group: {' | '.join(notes)}")


def test_c10_reference_rows_fixture(criterion, reference_csv, tmp_path):
    data = io.read_dataset(reference_csv)
    shape_ok = len(data) == 14 and set(data.labels) == {"E"} and data.progress.tolist() == list(range(1, 15))
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    io.write_dataset(data, first)
    io.write_dataset(io.read_dataset(first), second)
    stable = first.read_bytes() == second.read_bytes() == reference_csv.read_bytes()

    spec = bn.fit_discretization(data, "eqfreq", 3)
    disc = bn.apply_discretization(spec, data)
    agree = True
    for name in FEATURE_NAMES:
        bins, cuts = equal_frequency_cuts(data.column(name).tolist(), 3)
        agree &= list(spec.cut_points[name]) == cuts and disc.column(name).tolist() == bins
    ok = shape_ok and stable and agree
    criterion(10, ok, f"14 rows ingested: {shape_ok}; byte-stable: {stable}; quantile bins agree: {agree}")


def _cli(*argv):
    return main([str(a) for a in argv])


def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _pipeline(root):
    imgs = root / "imgs"
    imgs.mkdir(parents=True)
    codes = []
    for i in range(4):
        codes.append(_cli("simulate", "--mode", "phasor", "--width", 64, "--height", 64, "--n", 200,
                          "--seed", i, "--out", imgs / f"{i}.pgm"))
        codes.append(_cli("simulate", "--width", 64, "--height", 64, "--blur-sigma", 0.5 * i,
                          "--seed", i, "--out", imgs / f"{i}.spkl"))
    codes.append(_cli("features", "--images", imgs, "--class", "S", "--progress", "--out", root / "feat.csv"))
    io.write_dataset(separable_dataset(7), root / "train.csv")
    codes.append(_cli("train", "--data", root / "train.csv", "--t", 0.05, "--bins", 2, "--model", root / "m.json"))
    codes.append(_cli("classify", "--model", root / "m.json", "--data", root / "train.csv", "--out", root / "pred.csv"))
    codes.append(_cli("evaluate", "--model", root / "m.json", "--data", root / "train.csv",
                      "--positive-class", "S", "--out", root / "eval.json"))
    io.write_dataset(progress_dataset(7, inject=2), root / "prog.csv")
    codes.append(_cli("discover-links", "--data", root / "prog.csv", "--report", root / "links.csv",
                      "--skeleton", root / "skel.json"))
    (root / "repro.json").write_text(
        '{"groups": [{"name": "S", "params": {"count": 6, "width": 48, "height": 48, '
        '"blur_sigma_ramp": [0, 2]}}, {"name": "EM", "params": {"count": 6, "width": 48, "height": 48}}], '
        '"seed": 11}'
    )
    codes.append(_cli("experiment", "--config", root / "repro.json", "--outdir", root / "out"))
    return codes


def test_c11_determinism(criterion, tmp_path, capsys):
    codes_a = _pipeline(tmp_path / "a")
    codes_b = _pipeline(tmp_path / "b")
    capsys.readouterr()
    snap_a, snap_b = _snapshot(tmp_path / "a"), _snapshot(tmp_path / "b")
    differing = sorted(k for k in snap_a if snap_a[k] != snap_b.get(k))
    ok = set(codes_a + codes_b) == {0} and snap_a.keys() == snap_b.keys() and not differing
    criterion(
        11,
        ok,
        f"{len(snap_a)} artifacts from simulate/features/train/classify/evaluate/discover-links/experiment, "
        f"differing: {differing or 'none'}",
    )
