"""CSV schemas, writers and the loader the plotting helpers read back."""

from __future__ import annotations

from .bench import BenchRecord, TrainStep

RECORD_COLUMNS = ["estimator", "spec", "n", "S", "lambda", "tau", "seed",
                  "cosine", "l0_norm", "zero_fraction", "wall_time_s"]
AGG_COLUMNS = ["estimator", "spec", "n", "S", "lambda", "tau", "seeds",
               "cosine_mean", "cosine_std", "l0_norm_mean", "l0_norm_std",
               "zero_fraction_mean", "zero_fraction_std", "wall_time_s_mean"]
TRAJECTORY_COLUMNS = ["step", "loss", "lambda", "g_bar", "alpha"]
BIAS_COLUMNS = ["lambda", "unscaled_norm", "scaled_norm", "exact_norm",
                "bias_norm", "cosine_to_exact"]


def _fmt(value) -> str:
    if isinstance(value, bool):
        raise TypeError("no boolean CSV fields")
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _record_cells(r: BenchRecord) -> list:
    lam = "adaptive" if r.adaptive else (r.lam if r.lam is not None else float("nan"))
    return [r.estimator, r.spec, r.n, r.samples, lam, r.tau, r.seed,
            r.cosine, r.l0_norm, r.zero_fraction, r.wall_time_s]


def write_csv(path, columns: list[str], rows: list[list]):
    """Comma-separated, UTF-8, LF line endings; values never need quoting."""
    lines = [",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, header has {len(columns)}")
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_records_csv(path, records: list[BenchRecord]):
    write_csv(path, RECORD_COLUMNS, [_record_cells(r) for r in records])


def write_aggregate_csv(path, agg_rows: list[dict]):
    write_csv(path, AGG_COLUMNS, [[row[c] for c in AGG_COLUMNS] for row in agg_rows])


def write_trajectory_csv(path, trajectory: list[TrainStep]):
    rows = [[t.step, t.loss, t.lam, t.g_bar, t.alpha] for t in trajectory]
    write_csv(path, TRAJECTORY_COLUMNS, rows)


def write_bias_csv(path, bias_rows: list[dict]):
    write_csv(path, BIAS_COLUMNS, [[row[c] for c in BIAS_COLUMNS] for row in bias_rows])


def _coerce(cell: str):
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)  # also parses "nan"
    except ValueError:
        return cell


def load_csv(path) -> list[dict]:
    """Read any CSV written by this module back into typed dict rows."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    header = lines[0].split(",")
    return [dict(zip(header, map(_coerce, ln.split(",")))) for ln in lines[1:]]
