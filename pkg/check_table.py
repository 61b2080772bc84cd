#!/usr/bin/env python3
"""CLI utility to verify a coefficient table against a lattice."""

from __future__ import annotations

import argparse
import sys
from collections import Counter
from pathlib import Path

from src.lattice import LatticeError, discriminant_form, load_gram
from src.tables import CoefficientTableReader, TableError

KIND_TO_SCHEMA = {
    "fourier": "fourier",
    "exact": "fourier_exact",
    "ppart": "principal_part",
    "basis": "basis",
}


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Validate a JSON, CSV or Excel coefficient table against a lattice.",
    )
    parser.add_argument(
        "file",
        type=Path,
        help="Path to the coefficient table.",
    )
    parser.add_argument(
        "--gram",
        type=Path,
        help="Gram matrix of the lattice; enables the index-class and range checks.",
    )
    parser.add_argument(
        "--kind",
        choices=sorted(KIND_TO_SCHEMA),
        help="Table kind (defaults to deriving from the file name).",
    )
    parser.add_argument(
        "--max-errors",
        dest="max_errors",
        type=int,
        default=20,
        help="Maximum number of invalid rows to display in the summary (default: 20).",
    )
    return parser.parse_args()


def resolve_kind(kind: str | None, file_name: str) -> str:
    if kind:
        return kind
    stem = Path(file_name).stem.lower()
    for candidate in ("ppart", "basis", "cusps", "exact"):
        if candidate in stem:
            return "basis" if candidate == "cusps" else candidate
    return "fourier"


def main() -> int:
    args = parse_args()
    file_path = args.file

    if not file_path.exists():
        print(f"Error: file not found: {file_path}", file=sys.stderr)
        return 2

    kind = resolve_kind(args.kind, file_path.name)
    schema_name = KIND_TO_SCHEMA[kind]

    df = None
    if args.gram is not None:
        try:
            df = discriminant_form(load_gram(args.gram))
        except (LatticeError, OSError, ValueError) as exc:
            print(f"Error while reading {args.gram}: {exc}", file=sys.stderr)
            return 2

    reader = CoefficientTableReader(df)
    try:
        clean_df, invalid_df, _ = reader.read(
            file_path,
            schema_name,
            dual=kind != "ppart",
            cusp=kind == "basis",
        )
    except (TableError, OSError, ValueError) as exc:
        print(f"Error while validating {file_path.name}: {exc}", file=sys.stderr)
        return 1

    valid_count = len(clean_df)
    invalid_count = len(invalid_df)

    if invalid_count == 0:
        print(
            f"Success: {file_path.name} conforms to schema '{schema_name}'. "
            f"Validated rows: {valid_count}",
        )
        return 0

    print(
        f"Validation failed for {file_path.name} with schema '{schema_name}'. "
        f"Invalid rows: {invalid_count}; valid rows: {valid_count}",
        file=sys.stderr,
    )

    error_preview = invalid_df[["_row_number", "_error"]].head(args.max_errors)
    if not error_preview.empty:
        print("\nFirst validation errors:", file=sys.stderr)
        print(error_preview.to_string(index=False), file=sys.stderr)
        if invalid_count > args.max_errors:
            remaining = invalid_count - args.max_errors
            print(
                f"...omitted {remaining} additional invalid rows.",
                file=sys.stderr,
            )

    category_counts: Counter[str] = Counter()
    for categories in invalid_df["_category"].dropna():
        category_counts.update(set(filter(None, categories.split("; "))))

    if category_counts:
        print("\nError categories detected:", file=sys.stderr)
        for category, count in sorted(category_counts.items()):
            print(f"  - {category}: {count} rows", file=sys.stderr)

    return 1


if __name__ == "__main__":
    sys.exit(main())
