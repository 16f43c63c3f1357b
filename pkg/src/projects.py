"""
Replication Projects

Ingest replication-project datasets, recompute one-sided p-values with
Fisher's z-transformation and tabulate replication rates, success rates and
combined p-values per project.

Input CSV schemas:
    project,study,ro,no,rr,nr     correlation form
    project,study,po,pr,c         precomputed form (c optional)
"""

from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Union
import io
import json
import logging
import math

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .combine import assess_all, available_methods, clamp_pvalue
from .errors import DataError, UsageError
from .pydantic_models import (
    AnalysisRow,
    IngestReport,
    Method,
    RejectedRow,
    StudyPair,
    StudyRecord,
    Weights,
)
from .specfun import norm_sf

logger = logging.getLogger(__name__)

CORRELATION_COLUMNS = ["project", "study", "ro", "no", "rr", "nr"]
PRECOMPUTED_COLUMNS = ["project", "study", "po", "pr"]

# Recomputed p-values from very precise originals reach far below 1e-16.
DATASET_P_FLOOR = 1e-300

REPLICATION_SIGNIFICANCE = 0.025
DEFAULT_THRESHOLDS = (1e-6, 1e-5, 1e-4, 0.001, 0.005, 0.01, 0.025, 0.05)
DEFAULT_ALPHA_SQ_GRID = tuple(
    a * a for a in (0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05, 0.075, 0.1)
)

RATES_BY_THRESHOLD_COLUMNS = ["threshold", "n_below", "rate_below", "n_above", "rate_above"]
SUCCESS_RATE_COLUMNS = ["project", "method", "alpha_sq", "n", "successes", "rate", "rate_percent"]

CsvSource = Union[str, Path, TextIO]


def _column_key(method: Method) -> str:
    return method.value.replace("-", "_")


# Ingestion

def _cell(value) -> str:
    # short rows come back from pandas as NaN
    if value is None or isinstance(value, float):
        return ""
    return str(value).strip()


def _parse_float(value, column: str) -> Optional[float]:
    value = _cell(value)
    if not value:
        return None
    try:
        number = float(value)
    except ValueError:
        raise ValueError(f"column '{column}': '{value}' is not a number")
    if not math.isfinite(number):
        raise ValueError(f"column '{column}': '{value}' is not finite")
    return number


def _parse_int(value, column: str) -> Optional[int]:
    number = _parse_float(value, column)
    if number is None:
        return None
    if not number.is_integer():
        raise ValueError(f"column '{column}': '{_cell(value)}' is not an integer")
    return int(number)


def _validation_message(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(part) for part in err.get("loc", ()))
        parts.append(f"column '{loc}': {err['msg']}" if loc else err["msg"])
    return "; ".join(parts)


def _row_to_record(row: Dict[str, object]) -> StudyRecord:
    fields: Dict[str, object] = {
        "project": _cell(row.get("project")),
        "study": _cell(row.get("study")),
    }
    for column in ("ro", "rr", "po", "pr", "c"):
        if column in row:
            fields[column] = _parse_float(row[column], column)
    for column in ("no", "nr"):
        if column in row:
            fields[column] = _parse_int(row[column], column)
    return StudyRecord(**fields)


def ingest_csv(source: CsvSource, source_name: Optional[str] = None, strict: bool = False) -> IngestReport:
    """
    Read and validate a replication-project CSV.

    Rows that fail validation are collected with their 1-based line number
    (the header is line 1) instead of aborting the whole file.

    Args:
        source: Path to a CSV file, or a text stream
        source_name: Name recorded in the report; defaults to the file name
        strict: Raise DataError if any row is rejected

    Raises:
        UsageError: If the file is empty or has neither schema's header
        DataError: In strict mode, if any row is rejected
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.is_file():
            raise UsageError(f"Input file not found: {path}")
        name = source_name or path.name
        reader_input: Union[Path, TextIO] = path
    else:
        name = source_name or "<stream>"
        reader_input = source

    try:
        frame = pd.read_csv(
            reader_input,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            skip_blank_lines=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as e:
        raise UsageError(f"Input '{name}' is empty") from e
    except pd.errors.ParserError as e:
        raise DataError(f"Input '{name}' is not valid CSV: {e}") from e
    except UnicodeDecodeError as e:
        raise DataError(f"Input '{name}' is not UTF-8 text: {e.reason} at byte {e.start}") from e

    frame.columns = [str(col).strip() for col in frame.columns]
    # blank lines stay in the frame until here so the index tracks physical lines
    if not frame.empty:
        blank = frame.fillna("").apply(lambda col: col.str.strip() == "").all(axis=1)
        frame = frame.loc[~blank.astype(bool)]
    columns = set(frame.columns)
    if not (set(CORRELATION_COLUMNS) <= columns or set(PRECOMPUTED_COLUMNS) <= columns):
        raise UsageError(
            f"Input '{name}' needs header {','.join(CORRELATION_COLUMNS)} or {','.join(PRECOMPUTED_COLUMNS)}[,c]"
        )
    if frame.empty:
        raise UsageError(f"Input '{name}' has a header but no rows")

    records: List[StudyRecord] = []
    rejected: List[RejectedRow] = []
    for index, row in zip(frame.index, frame.to_dict(orient="records")):
        line = int(index) + 2
        try:
            records.append(_row_to_record(row))
        except ValidationError as e:
            rejected.append(RejectedRow(line=line, message=_validation_message(e)))
        except ValueError as e:
            rejected.append(RejectedRow(line=line, message=str(e)))

    logger.info(f"Ingested '{name}': {len(records)} accepted, {len(rejected)} rejected of {len(frame)} rows")
    report = IngestReport(source_name=name, total_rows=len(frame), records=records, rejected=rejected)

    if strict and rejected:
        raise DataError(
            f"{len(rejected)} row(s) of '{name}' failed validation",
            [(r.line, r.message) for r in rejected],
        )
    return report


def ingest_text(text: str, source_name: str, strict: bool = False) -> IngestReport:
    """Ingest CSV content held in memory (uploads, tests)."""
    if not text.strip():
        raise UsageError(f"Input '{source_name}' is empty")
    return ingest_csv(io.StringIO(text), source_name=source_name, strict=strict)


# Study pairs

def to_study_pair(rec: StudyRecord) -> StudyPair:
    """
    One-sided p-values of a record, oriented by the original estimate.

    po = 1 - Phi(|atanh(ro)| sqrt(no - 3)),
    pr = 1 - Phi(sign(ro) atanh(rr) sqrt(nr - 3)),
    c = (nr - 3) / (no - 3).
    """
    if rec.has_correlation_form:
        z_o = math.atanh(rec.ro) * math.sqrt(rec.no - 3)
        z_r = math.copysign(1.0, rec.ro) * math.atanh(rec.rr) * math.sqrt(rec.nr - 3) if rec.ro != 0 else 0.0
        po = clamp_pvalue(norm_sf(abs(z_o)), floor=DATASET_P_FLOOR)
        pr = clamp_pvalue(norm_sf(z_r), floor=DATASET_P_FLOOR)
        return StudyPair(po=po, pr=pr, c=(rec.nr - 3) / (rec.no - 3))
    return StudyPair(po=rec.po, pr=rec.pr, c=rec.c)


def analyze_records(
    records: Sequence[StudyRecord],
    methods: Optional[Iterable[Method]] = None,
    alpha: float = 0.025,
    weights: Optional[Weights] = None,
) -> List[AnalysisRow]:
    """Combined p-values and verdicts of every record, in input order."""
    wanted = list(methods) if methods is not None else list(Method)
    rows: List[AnalysisRow] = []
    for rec in records:
        pair = to_study_pair(rec)
        usable = [m for m in wanted if m in available_methods(pair)]
        rows.append(
            AnalysisRow(
                project=rec.project,
                study=rec.study,
                po=pair.po,
                pr=pair.pr,
                c=pair.c,
                results=assess_all(pair, usable, alpha=alpha, weights=weights),
                wrong_direction=pair.pr > 0.5,
            )
        )
    return rows


def filter_projects(records: Sequence[StudyRecord], projects: Optional[Iterable[str]]) -> List[StudyRecord]:
    if not projects:
        return list(records)
    keep = set(projects)
    missing = keep - {rec.project for rec in records}
    if missing:
        raise UsageError(f"Unknown project(s): {', '.join(sorted(missing))}")
    return [rec for rec in records if rec.project in keep]


def _project_order(rows: Sequence[AnalysisRow]) -> List[str]:
    return list(dict.fromkeys(row.project for row in rows))


# Tables

def replication_rate_by_threshold(
    rows: Sequence[AnalysisRow],
    thresholds: Iterable[float] = DEFAULT_THRESHOLDS,
    significance: float = REPLICATION_SIGNIFICANCE,
) -> pd.DataFrame:
    """
    Share of significant replications (pr <= significance) among pairs with
    po <= t and among pairs with po > t. Rates of empty groups are NaN.
    """
    if not rows:
        raise UsageError("No study pairs to tabulate")
    po = np.array([row.po for row in rows])
    significant = np.array([row.pr <= significance for row in rows])

    table = []
    for t in thresholds:
        if not 0.0 < t < 1.0:
            raise UsageError(f"Thresholds must lie strictly between 0 and 1, got {t}")
        below = po <= t
        n_below = int(below.sum())
        n_above = int((~below).sum())
        table.append({
            "threshold": float(t),
            "n_below": n_below,
            "rate_below": float(significant[below].mean()) if n_below else math.nan,
            "n_above": n_above,
            "rate_above": float(significant[~below].mean()) if n_above else math.nan,
        })
    return pd.DataFrame(table, columns=RATES_BY_THRESHOLD_COLUMNS)


def success_rates(
    rows: Sequence[AnalysisRow],
    alpha_sq_grid: Iterable[float] = DEFAULT_ALPHA_SQ_GRID,
    methods: Optional[Iterable[Method]] = None,
) -> pd.DataFrame:
    """
    Fraction of pairs with combined p-value <= alpha^2, per project, method
    and alpha^2. Pairs without a result for a method are left out of its
    denominator.
    """
    grid = [float(a) for a in alpha_sq_grid]
    wanted = list(methods) if methods is not None else list(Method)
    table = []
    for project in _project_order(rows):
        members = [row for row in rows if row.project == project]
        for method in wanted:
            ps = np.array([row.results[method].p_combined for row in members if method in row.results])
            if ps.size == 0:
                continue
            for alpha_sq in grid:
                successes = int((ps <= alpha_sq).sum())
                rate = successes / ps.size
                table.append({
                    "project": project,
                    "method": method.value,
                    "alpha_sq": alpha_sq,
                    "n": int(ps.size),
                    "successes": successes,
                    "rate": rate,
                    "rate_percent": round(100.0 * rate, 1),
                })
    return pd.DataFrame(table, columns=SUCCESS_RATE_COLUMNS)


def combined_pvalue_table(
    rows: Sequence[AnalysisRow],
    significance: float = REPLICATION_SIGNIFICANCE,
) -> List[AnalysisRow]:
    """Rows whose replication is not significant (pr > significance)."""
    return [row for row in rows if row.pr > significance]


def analysis_frame(rows: Sequence[AnalysisRow]) -> pd.DataFrame:
    """Flatten analysis rows: one p_<method> and success_<method> column per method."""
    methods = [m for m in Method if any(m in row.results for row in rows)]
    columns = ["project", "study", "po", "pr", "c"]
    columns += [f"p_{_column_key(m)}" for m in methods]
    columns += [f"success_{_column_key(m)}" for m in methods]
    columns += ["wrong_direction"]

    records = []
    for row in rows:
        flat = {"project": row.project, "study": row.study, "po": row.po, "pr": row.pr, "c": row.c}
        for m in methods:
            result = row.results.get(m)
            flat[f"p_{_column_key(m)}"] = result.p_combined if result else None
            flat[f"success_{_column_key(m)}"] = result.success if result else None
        flat["wrong_direction"] = row.wrong_direction
        records.append(flat)
    return pd.DataFrame(records, columns=columns)


def discordant_pairs(
    rows: Sequence[AnalysisRow],
    first: Method = Method.EDGINGTON,
    second: Method = Method.TWO_TRIALS,
) -> List[AnalysisRow]:
    """Rows where the two methods reach different verdicts."""
    return [
        row for row in rows
        if first in row.results and second in row.results
        and row.results[first].success != row.results[second].success
    ]


def summary_statistics(
    rows: Sequence[AnalysisRow],
    significance: float = REPLICATION_SIGNIFICANCE,
) -> Dict[str, object]:
    """Headline counts of a dataset analysis."""
    nonsignificant = combined_pvalue_table(rows, significance)
    edgington_ps = [row.results[Method.EDGINGTON].p_combined for row in nonsignificant if Method.EDGINGTON in row.results]

    def wrong_direction_successes(method: Method) -> int:
        return sum(1 for row in rows if row.wrong_direction and method in row.results and row.results[method].success)

    return {
        "n_pairs": len(rows),
        "pairs_per_project": {p: sum(1 for row in rows if row.project == p) for p in _project_order(rows)},
        "n_po_below_1e-6": sum(1 for row in rows if row.po < 1e-6),
        "n_nonsignificant_replications": len(nonsignificant),
        "min_edgington_p_nonsignificant": min(edgington_ps) if edgington_ps else None,
        "n_discordant_edgington_two_trials": len(discordant_pairs(rows)),
        "fisher_successes_wrong_direction": wrong_direction_successes(Method.FISHER),
        "meta_successes_wrong_direction": wrong_direction_successes(Method.META_ANALYSIS),
    }


# Output

def _sig(value):
    """Round floats to 6 significant digits; NaN becomes None."""
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return None
        return float(f"{value:.6g}")
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def frame_records(frame: pd.DataFrame) -> List[Dict[str, object]]:
    """DataFrame rows as JSON-ready dicts with probabilities at 6 significant digits."""
    return [{k: _sig(v) for k, v in row.items()} for row in frame.to_dict(orient="records")]


def write_table(frame: pd.DataFrame, out_dir: Path, stem: str) -> List[Path]:
    """Write `<stem>.csv` and its `<stem>.json` mirror."""
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    frame.to_csv(csv_path, index=False, float_format="%.6g", lineterminator="\n")
    json_path.write_text(json.dumps(frame_records(frame), indent=2) + "\n", encoding="utf-8")
    return [csv_path, json_path]


def write_report(
    rows: Sequence[AnalysisRow],
    out_dir: Union[str, Path],
    thresholds: Iterable[float] = DEFAULT_THRESHOLDS,
    alpha_sq_grid: Iterable[float] = DEFAULT_ALPHA_SQ_GRID,
    significance: float = REPLICATION_SIGNIFICANCE,
) -> List[Path]:
    """
    Write rates_by_threshold, success_rates and combined_pvalues as CSV and
    JSON. Output depends only on the rows, so repeated runs are identical.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written: List[Path] = []
    written += write_table(replication_rate_by_threshold(rows, thresholds, significance), out_dir, "rates_by_threshold")
    written += write_table(success_rates(rows, alpha_sq_grid), out_dir, "success_rates")
    written += write_table(analysis_frame(combined_pvalue_table(rows, significance)), out_dir, "combined_pvalues")

    logger.info(f"Wrote {len(written)} report files to {out_dir}")
    return written
