"""Experiment reports: raw CSV, markdown summary, SVG boxplots."""

from __future__ import annotations

import csv
import io
import os
import statistics
from dataclasses import asdict, fields

from .errors import SemiConcreteError, ValidationError
from .experiment import BASELINE, SAMPLING_STRATEGIES, CellResult, ExperimentResult, comparisons, group_label

FORMATS = ("csv", "markdown", "svg_boxplot")
OUTLIER_CUTOFF = 0.5
_CSV_FIELDS = [f.name for f in fields(CellResult)]


def to_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_CSV_FIELDS)
    for c in result.cells:
        row = asdict(c)
        row["feedback"] = int(c.feedback)
        row["mutation_score"] = repr(c.mutation_score)
        w.writerow([row[k] for k in _CSV_FIELDS])
    return buf.getvalue()


def cells_from_csv(text: str) -> list[CellResult]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        out.append(CellResult(
            r["strategy"], int(r["t"]), bool(int(r["feedback"])), int(r["repetition"]), int(r["seed"]),
            int(r["suite_size"]), int(r["valid_tests"]), float(r["mutation_score"]), int(r["simulations"]),
            int(r["resample_attempts"]), int(r["irrelevant"]),
        ))
    return out


def comparisons_from_csv(text: str):
    return comparisons(cells_from_csv(text))


def _groups(result: ExperimentResult, t: int) -> list[tuple[str, list[CellResult]]]:
    order = [(BASELINE, False)] + [(s, fb) for s in SAMPLING_STRATEGIES for fb in (False, True)]
    out = []
    for strategy, fb in order:
        cs = [c for c in result.cells if (c.strategy, c.t, c.feedback) == (strategy, t, fb)]
        if cs:
            out.append((group_label(strategy, fb), cs))
    return out


def to_markdown(result: ExperimentResult) -> str:
    lines = ["# Mutation-score experiment", ""]
    prov = result.provenance
    if prov:
        lines += [f"- master seed: {prov.get('master_seed')}",
                  f"- model hash: `{prov.get('model_hash', '')[:16]}`",
                  f"- mutants: {len(prov.get('mutants', []))}",
                  f"- t-wise polarity mode: {prov.get('polarity_mode')}", ""]
    lines += ["## Scores", "",
              "| t | group | n | median | mean | min | max | suite size | extra simulations |",
              "|---|---|---|---|---|---|---|---|---|"]
    for t in sorted({c.t for c in result.cells}):
        for label, cs in _groups(result, t):
            s = [c.mutation_score for c in cs]
            lines.append(
                f"| {t} | {label} | {len(s)} | {statistics.median(s):.3f} | {statistics.fmean(s):.3f} | "
                f"{min(s):.3f} | {max(s):.3f} | {statistics.fmean(c.suite_size for c in cs):.1f} | "
                f"{statistics.fmean(c.resample_attempts for c in cs):.1f} |")
    lines += ["", "## Pairwise comparisons", "",
              "A12 is the probability that the treatment scores higher than the reference.", "",
              "| t | question | reference | treatment | U | p | A12 | magnitude | method |",
              "|---|---|---|---|---|---|---|---|---|"]
    for r in result.comparisons:
        c = r.result
        lines.append(f"| {r.t} | {r.question} | {r.reference} | {r.treatment} | {c.u_statistic:g} | "
                     f"{c.p_value:.4g} | {c.a12:.3f} | {c.magnitude} | {c.method} |")
    return "\n".join(lines) + "\n"


def boxplot_data(result: ExperimentResult, hide_outliers: bool = False) -> dict[int, list[tuple[str, list[float]]]]:
    """Per-t groups of scores as drawn; the outlier filter never touches the statistics."""
    out = {}
    for t in sorted({c.t for c in result.cells}):
        rows = []
        for label, cs in _groups(result, t):
            s = [c.mutation_score for c in cs]
            if hide_outliers:
                s = [x for x in s if x >= OUTLIER_CUTOFF]
            rows.append((label, s))
        out[t] = rows
    return out


def to_svg(result: ExperimentResult, hide_outliers: bool = False) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "semiconcrete"
    data = boxplot_data(result, hide_outliers)
    fig, axes = plt.subplots(1, len(data), figsize=(5.5 * len(data), 4.2), squeeze=False)
    for ax, (t, rows) in zip(axes[0], data.items()):
        labels = [label.replace("+", "\n") for label, _ in rows]
        ax.boxplot([s if s else [float("nan")] for _, s in rows], showfliers=not hide_outliers)
        ax.set_xticks(range(1, len(rows) + 1), labels, fontsize=7)
        ax.set_title(f"t={t}")
        ax.set_ylabel("mutation score")
        ax.set_ylim(-0.02, 1.02)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def report(result: ExperimentResult, fmt: str, path, hide_outliers: bool = False) -> str:
    if fmt not in FORMATS:
        raise ValidationError(f"format must be one of {FORMATS}")
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "markdown":
        text = to_markdown(result)
    else:
        text = to_svg(result, hide_outliers)
    try:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise SemiConcreteError(f"cannot write {path}: {exc}") from exc
    return path
