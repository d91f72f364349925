"""File formats: feature CSV, PGM / SPKL1 rasters, model and report JSON.

This is the only module that touches the filesystem.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import re
import struct
from pathlib import Path

import numpy as np

from . import bayesnet as bn
from .dataset import DataSet
from .errors import DataError
from .evaluation import ExperimentConfig, ExperimentResult
from .speckle import SpeckleImage, SpeckleParams
from .texture import FEATURE_DEFINITIONS, FEATURE_NAMES

__all__ = [
    "FORMAT_VERSIONS",
    "format_number",
    "read_dataset",
    "write_dataset",
    "dataset_to_csv",
    "read_image",
    "write_pgm",
    "write_spkl",
    "write_image",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "load_config",
    "write_link_report",
    "write_experiment",
]

HEADER = FEATURE_NAMES + ("class",)
HEADER_PROGRESS = HEADER + ("progress",)
SPKL_MAGIC = b"SPKL1"
PGM_MAXVAL = 65535

FORMAT_VERSIONS = {
    "model-json": bn.FORMAT_VERSION,
    "experiment-config": 1,
    "feature-csv": 1,
    "spkl": 1,
    "pgm-scale-comment": 1,
}

FEATURE_COMMENT = "features: " + ", ".join(
    f"{name}={'%g*' % scale if scale != 1 else ''}{stat}@{k}x{k}"
    for name, stat, k, scale in FEATURE_DEFINITIONS
)


def format_number(x: float) -> str:
    """Shortest decimal that parses back to exactly ``x`` (integers lose ``.0``)."""
    x = float(x)
    if not math.isfinite(x):
        raise DataError(f"cannot write non-finite value {x!r}")
    s = repr(x)
    return s[:-2] if s.endswith(".0") else s


# feature CSV


def _parse_dataset(lines, where: str) -> DataSet:
    reader = csv.reader(lines)
    header = None
    rows, labels, progress = [], [], []
    for lineno, fields in enumerate(reader, start=1):
        if header is None:
            if fields and fields[0].startswith("#"):
                continue
            header = tuple(fields)
            if header not in (HEADER, HEADER_PROGRESS):
                raise DataError(
                    f"{where}:{lineno}: header must be {','.join(HEADER)}[,progress], got {','.join(fields)!r}"
                )
            continue
        if len(fields) != len(header):
            raise DataError(f"{where}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        values = []
        for name, text in zip(FEATURE_NAMES, fields):
            try:
                v = float(text)
            except ValueError:
                raise DataError(f"{where}:{lineno}: {name} is not numeric: {text!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{where}:{lineno}: {name} is not finite: {text!r}")
            values.append(v)
        label = fields[9].strip()
        if not label or label != fields[9]:
            raise DataError(f"{where}:{lineno}: class must be a non-empty token, got {fields[9]!r}")
        if len(header) == 11:
            text = fields[10]
            if not re.fullmatch(r"[0-9]+", text) or int(text) < 1:
                raise DataError(f"{where}:{lineno}: progress must be a positive integer, got {text!r}")
            progress.append(int(text))
        rows.append(values)
        labels.append(label)
    if header is None:
        raise DataError(f"{where}: missing header line")
    return DataSet(
        FEATURE_NAMES,
        np.array(rows, dtype=np.float64).reshape(-1, len(FEATURE_NAMES)),
        tuple(labels),
        np.array(progress, dtype=np.int64) if len(header) == 11 else None,
    )


def read_dataset(path) -> DataSet:
    """Read a feature CSV; any malformed line aborts with its line number.

    Leading ``#`` comment lines are skipped.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        return _parse_dataset(fh, str(path))


def dataset_to_csv(data: DataSet, comment: str | None = None) -> str:
    if data.attribute_names != FEATURE_NAMES:
        raise DataError(f"CSV schema needs attributes {FEATURE_NAMES}, got {data.attribute_names}")
    if data.labels is None:
        raise DataError("CSV schema needs a class column")
    for c in set(data.labels):
        if not c or "," in c or c != c.strip() or "\n" in c or '"' in c:
            raise DataError(f"class label {c!r} is not a plain token")
    out = _io.StringIO()
    if comment:
        for line in comment.splitlines():
            out.write(f"# {line}\n")
    header = HEADER_PROGRESS if data.progress is not None else HEADER
    out.write(",".join(header) + "\n")
    for i in range(len(data)):
        fields = [format_number(v) for v in data.values[i]] + [data.labels[i]]
        if data.progress is not None:
            fields.append(str(int(data.progress[i])))
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def write_dataset(data: DataSet, path, comment: str | None = None) -> None:
    text = dataset_to_csv(data, comment)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


# images


def write_spkl(image: SpeckleImage, path) -> None:
    """Exact float raster: magic, u32 width, u32 height, little-endian f64 row-major."""
    h, w = image.intensities.shape
    with open(path, "wb") as fh:
        fh.write(SPKL_MAGIC + struct.pack("<II", w, h))
        fh.write(image.intensities.astype("<f8").tobytes())


def _read_spkl(buf: bytes, where: str) -> SpeckleImage:
    if len(buf) < 13:
        raise DataError(f"{where}: truncated SPKL1 header")
    w, h = struct.unpack("<II", buf[5:13])
    body = buf[13:]
    if len(body) != 8 * w * h:
        raise DataError(f"{where}: expected {8 * w * h} raster bytes, found {len(body)}")
    return SpeckleImage(np.frombuffer(body, dtype="<f8").reshape(h, w))


def write_pgm(image: SpeckleImage, path, ascii: bool = False) -> None:
    """16-bit PGM; pixel = round(I / scale), with ``scale`` kept in a comment."""
    a = image.intensities
    h, w = a.shape
    peak = float(a.max())
    scale = peak / PGM_MAXVAL if peak > 0 else 1.0
    q = np.rint(a / scale).astype(np.int64).clip(0, PGM_MAXVAL)
    lines = [b"P2" if ascii else b"P5", b"# ilsc-scale " + format_number(scale).encode()]
    if image.params is not None:
        lines.append(b"# ilsc-params " + json.dumps(image.params.to_dict(), sort_keys=True).encode())
    if image.generator:
        lines.append(b"# ilsc-generator " + image.generator.encode())
    lines.append(f"{w} {h}".encode())
    lines.append(str(PGM_MAXVAL).encode())
    head = b"\n".join(lines) + b"\n"
    with open(path, "wb") as fh:
        fh.write(head)
        if ascii:
            for row in q:
                fh.write(" ".join(map(str, row)).encode() + b"\n")
        else:
            fh.write(q.astype(">u2").tobytes())


def _read_pgm(buf: bytes, where: str) -> SpeckleImage:
    magic = buf[:2]
    pos = 2
    tokens, comments = [], []
    while len(tokens) < 3:
        m = re.compile(rb"\s*(#[^\n]*\n?|[^\s#]+)").match(buf, pos)
        if m is None:
            raise DataError(f"{where}: truncated PGM header")
        tok = m.group(1)
        pos = m.end()
        if tok.startswith(b"#"):
            comments.append(tok[1:].strip().decode("utf-8", "replace"))
        else:
            tokens.append(tok)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise DataError(f"{where}: bad PGM header {tokens!r}") from None
    if not 0 < maxval <= PGM_MAXVAL:
        raise DataError(f"{where}: unsupported maxval {maxval}")
    if magic == b"P5":
        pos += 1  # single whitespace byte ends the header
        dtype = ">u2" if maxval > 255 else "u1"
        need = w * h * np.dtype(dtype).itemsize
        body = buf[pos : pos + need]
        if len(body) != need:
            raise DataError(f"{where}: expected {need} raster bytes, found {len(body)}")
        q = np.frombuffer(body, dtype=dtype).reshape(h, w).astype(np.float64)
    else:
        values = buf[pos:].split()
        if len(values) != w * h:
            raise DataError(f"{where}: expected {w * h} samples, found {len(values)}")
        q = np.array([int(v) for v in values], dtype=np.float64).reshape(h, w)
    scale, params, generator = 1.0, None, None
    for c in comments:
        if c.startswith("ilsc-scale "):
            scale = float(c.split(None, 1)[1])
        elif c.startswith("ilsc-params "):
            params = SpeckleParams(**json.loads(c.split(None, 1)[1]))
        elif c.startswith("ilsc-generator "):
            generator = c.split(None, 1)[1]
    return SpeckleImage(q * scale, params=params, generator=generator)


def read_image(path) -> SpeckleImage:
    """Load a PGM (P2/P5) or SPKL1 raster, recognised by its magic bytes."""
    buf = Path(path).read_bytes()
    if buf.startswith(SPKL_MAGIC):
        return _read_spkl(buf, str(path))
    if buf[:2] in (b"P5", b"P2"):
        return _read_pgm(buf, str(path))
    raise DataError(f"{path}: not a PGM or SPKL1 file")


def write_image(image: SpeckleImage, path, ascii: bool = False) -> None:
    if str(path).lower().endswith(".spkl"):
        write_spkl(image, path)
    else:
        write_pgm(image, path, ascii=ascii)


# models


def model_to_dict(net: bn.BayesNet) -> dict:
    if net.cpts is None:
        raise DataError("only fitted networks can be serialized")
    spec = net.discretization
    return {
        "format_version": bn.FORMAT_VERSION,
        "attributes": list(net.attributes),
        "class_values": list(net.class_values),
        "discretization": {
            "method": spec.method.value,
            "bins": spec.bins,
            "cut_points": {k: list(v) for k, v in spec.cut_points.items()},
        },
        "edges": [list(e) for e in net.edges],
        "parents": {k: list(v) for k, v in net.parents.items()},
        "cpts": {k: v.tolist() for k, v in net.cpts.items()},
        "class_scores": dict(net.class_scores),
        "t": net.t,
        "significance": net.significance,
        "alpha": net.alpha,
    }


def model_from_dict(d: dict) -> bn.BayesNet:
    if d.get("format_version") != bn.FORMAT_VERSION:
        raise DataError(f"unsupported model format_version {d.get('format_version')!r}")
    try:
        disc = d["discretization"]
        spec = bn.DiscretizationSpec(
            bn.Method(disc["method"]),
            int(disc["bins"]),
            {k: tuple(float(x) for x in v) for k, v in disc["cut_points"].items()},
        )
        cpts = {}
        for k, v in d["cpts"].items():
            a = np.array(v, dtype=np.float64)
            a.setflags(write=False)
            cpts[k] = a
        return bn.BayesNet(
            attributes=tuple(d["attributes"]),
            class_values=tuple(d["class_values"]),
            parents={k: tuple(v) for k, v in d["parents"].items()},
            discretization=spec,
            t=float(d["t"]),
            significance=d["significance"],
            alpha=float(d["alpha"]),
            cpts=cpts,
            class_scores={k: float(v) for k, v in d.get("class_scores", {}).items()},
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed model document: {exc}") from None


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def save_model(net: bn.BayesNet, path) -> None:
    Path(path).write_text(_dump_json(model_to_dict(net)), encoding="utf-8")


def load_model(path) -> bn.BayesNet:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    return model_from_dict(d)


def load_config(path) -> ExperimentConfig:
    """Parse an experiment config strictly (unknown keys are rejected)."""
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    return ExperimentConfig.from_dict(d)


def read_group_tables(config: ExperimentConfig, base_dir) -> dict:
    base = Path(base_dir)
    return {
        g.name: read_dataset(base / g.path)
        for g in config.groups
        if g.source == "csv"
    }


# reports


def link_report_csv(report: bn.LinkReport) -> str:
    lines = [f"# tested={report.tested_attribute} t={format_number(report.t)} verdict={str(report.verdict).lower()}"]
    lines.append("attribute,score_bits,p_value")
    for attr, score, p in report.incident_edges:
        lines.append(f"{attr},{format_number(score)},{format_number(p)}")
    return "\n".join(lines) + "\n"


def write_link_report(report: bn.LinkReport, path) -> None:
    Path(path).write_text(link_report_csv(report), encoding="utf-8")


def skeleton_to_dict(skeleton: bn.Skeleton) -> dict:
    return {
        "nodes": list(skeleton.nodes),
        "edges": [
            {"a": a, "b": b, "score_bits": skeleton.scores[(a, b)]} for a, b in skeleton.edges
        ],
    }


def _summary_csv(result: ExperimentResult) -> str:
    spans, start = [], 1
    for name, d in result.groups.items():
        spans.append(f"{name}={start}-{start + len(d) - 1}")
        start += len(d)
    lines = [
        "# progress numbered in group order: " + " ".join(spans),
        "comparison,n_train,n_test,accuracy,sensitivity,specificity,selected_features",
    ]
    for c in result.comparisons:
        r = c.report
        lines.append(
            ",".join(
                [
                    c.name,
                    str(r.n_train),
                    str(r.n_test),
                    format_number(r.accuracy),
                    "nan" if math.isnan(r.sensitivity) else format_number(r.sensitivity),
                    "nan" if math.isnan(r.specificity) else format_number(r.specificity),
                    ";".join(c.model.selected),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_experiment(result: ExperimentResult, outdir) -> list:
    """Write the report bundle; returns the paths written, in write order."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, text):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    emit("config.json", _dump_json(result.config.to_dict()))
    emit("features.csv", dataset_to_csv(result.pooled, FEATURE_COMMENT))
    emit("summary.csv", _summary_csv(result))
    for c in result.comparisons:
        emit(f"eval_{c.name}.json", _dump_json(c.report.to_dict()))
        emit(f"model_{c.name}.json", _dump_json(model_to_dict(c.model)))
    emit("links.csv", link_report_csv(result.links))
    emit("skeleton.json", _dump_json(skeleton_to_dict(result.skeleton)))
    for name, report in result.group_links.items():
        emit(f"links_{name}.csv", link_report_csv(report))
    return written


def list_images(spec: str) -> list:
    """Resolve ``--images``: a directory, a text file of paths, or a comma list.

    Directory entries (``.pgm``/``.spkl``) are taken in sorted name order.
    """
    p = Path(spec)
    if p.is_dir():
        files = sorted(f for f in p.iterdir() if f.suffix.lower() in (".pgm", ".spkl"))
        if not files:
            raise DataError(f"{spec}: no .pgm or .spkl images found")
        return files
    if p.is_file() and p.suffix.lower() not in (".pgm", ".spkl"):
        base = p.parent
        entries = [line.strip() for line in p.read_text(encoding="utf-8").splitlines()]
        return [base / e if not os.path.isabs(e) else Path(e) for e in entries if e and not e.startswith("#")]
    return [Path(s) for s in spec.split(",") if s]
