import math

import pandas as pd
from loguru import logger

from data.image_io import write_json


def _json_number(value):
    """JSON-safe number: infinity becomes the "inf" sentinel, NaN becomes null"""
    if value is None:
        return None
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class ReportGenerator:
    """Report Generator class for run traces, quality reports and bench tables

    Trace and bench reports are written as JSON; bench tables also get an
    aligned text rendering for reading in a terminal.
    """

    def __init__(self, float_digits=4):
        """Initialize the Report Generator

        Args:
            float_digits (int): Decimals in text tables
        """
        self.float_digits = float_digits
        logger.info("Report Generator initialized")

    def trace_report(self, run):
        """Trace document of a blind run (no timings, so reruns are byte-identical)"""
        return run.to_dict()

    def write_trace(self, run, path):
        write_json(self.trace_report(run), path)
        logger.info(f"Trace written to {path}")

    def quality_document(self, report, **extra):
        """QualityReport as a JSON-ready dictionary, merged with extra fields"""
        document = report.to_dict()
        document.update(extra)
        return document

    def bench_table(self, rows, variants):
        """Arrange bench results in one row per image

        Args:
            rows (list): Dicts with 'image', 'blur' (QualityReport of the input)
                and one QualityReport per variant under its filter count
            variants (list): Filter counts in column order

        Returns:
            pd.DataFrame: 'image', 'Q_B blur', 'Q_B #n'... and, when any row has
                ground truth, 'PSNR blur', 'PSNR #n'...
        """
        has_truth = any(row['blur'].psnr_db is not None for row in rows)
        records = []
        for row in rows:
            record = {"image": row['image'], "Q_B blur": row['blur'].defocus_score}
            for n in variants:
                record[f"Q_B #{n}"] = row[n].defocus_score
            if has_truth:
                record["PSNR blur"] = row['blur'].psnr_db
                for n in variants:
                    record[f"PSNR #{n}"] = row[n].psnr_db
            records.append(record)
        columns = ["image", "Q_B blur"] + [f"Q_B #{n}" for n in variants]
        if has_truth:
            columns += ["PSNR blur"] + [f"PSNR #{n}" for n in variants]
        return pd.DataFrame(records, columns=columns)

    def format_table(self, table):
        """Aligned text rendering of a bench table with a mean row"""
        if table.empty:
            return "(no rows)"
        numeric = table.drop(columns=["image"]).apply(pd.to_numeric, errors="coerce")
        mean_row = numeric.mean().to_frame().T
        mean_row.insert(0, "image", "mean")
        full = pd.concat([table, mean_row], ignore_index=True)
        return full.to_string(index=False, float_format=lambda v: f"{v:.{self.float_digits}f}")

    def bench_document(self, table, config=None):
        """JSON document of a bench table: rows, column means and the best variant"""
        q_columns = [c for c in table.columns if c.startswith("Q_B #")]
        means = {c: _json_number(float(table[c].mean())) for c in table.columns if c != "image"}
        best = None
        if q_columns and not table.empty:
            best = min(q_columns, key=lambda c: table[c].mean())
        records = [
            {key: _json_number(value) for key, value in record.items()}
            for record in table.to_dict(orient="records")
        ]
        return {
            "config": config or {},
            "columns": list(table.columns),
            "rows": records,
            "means": means,
            "sharpest_variant": best,
        }

    def write_bench(self, table, json_path, text_path, config=None):
        """Write the bench table as JSON and aligned text"""
        write_json(self.bench_document(table, config), json_path)
        with open(text_path, 'w') as handle:
            handle.write(self.format_table(table) + "\n")
        logger.info(f"Bench report written to {json_path} and {text_path}")
