#!/usr/bin/env python3
"""Batch runner that recomputes E over a doubling range of truncations C."""

from __future__ import annotations

import argparse
import sys
from collections.abc import Iterator
from fractions import Fraction
from pathlib import Path

from src.eisenstein import ReconstructionError, fourier_coeffs_E, rationalize
from src.env import default_max_den, default_threads, load_env
from src.lattice import DiscriminantForm, LatticeError, discriminant_form, load_gram
from src.tables import FourierTable


def iter_truncations(start: int, end: int) -> Iterator[int]:
    current = start
    while current <= end:
        yield current
        current *= 2


def sweep(
    df: DiscriminantForm,
    weight: Fraction,
    depth: Fraction,
    truncations: list[int],
    *,
    max_den: int,
    threads: int,
) -> list[tuple[int, FourierTable | None, str]]:
    """Exact table (or the reconstruction failure) for every C."""
    results: list[tuple[int, FourierTable | None, str]] = []
    for index, C in enumerate(truncations, start=1):
        print(f"\n[{index}/{len(truncations)}] C = {C}")
        numeric = fourier_coeffs_E(df, weight, depth, C, threads=threads)
        worst = max(numeric.errors.values(), default=0.0)
        print(f"  - Largest coefficient error estimate: {worst:.3e}")
        try:
            exact, d = rationalize(numeric, max_den)
        except ReconstructionError as exc:
            print(f"  - Reconstruction failed: {exc}")
            results.append((C, None, str(exc)))
            continue
        print(f"  - Denominator d = {d}")
        results.append((C, exact, ""))
    return results


def first_stable(results: list[tuple[int, FourierTable | None, str]]) -> int | None:
    """Smallest C from which every later exact table agrees with it."""
    stable_from = None
    previous = None
    for C, table, _ in results:
        if table is None:
            stable_from, previous = None, None
            continue
        if previous is None or table.coeffs != previous.coeffs:
            stable_from = C
        previous = table
    return stable_from


def main() -> int:
    parser = argparse.ArgumentParser(
        description="Recompute the Eisenstein series for C = start, 2 start, ... <= end.",
    )
    parser.add_argument("--gram", type=Path, required=True, help="Gram matrix file.")
    parser.add_argument("--k", type=Fraction, default=None, help="Weight (default 1 + l/2).")
    parser.add_argument("--N", type=Fraction, required=True, help="Depth of the tables.")
    parser.add_argument("--start-c", type=int, default=4, help="First truncation (default: 4)")
    parser.add_argument("--end-c", type=int, default=128, help="Last truncation (default: 128)")
    parser.add_argument("--max-den", type=int, default=None, help="Largest denominator.")
    parser.add_argument(
        "--env-file",
        default=".env",
        help="Path to the .env file with WEILREP_* defaults (default: .env)",
    )

    args = parser.parse_args()
    if args.start_c < 1:
        parser.error("--start-c must be positive")
    if args.end_c < args.start_c:
        parser.error("--end-c must be at least --start-c")

    load_env(args.env_file)
    try:
        lat = load_gram(args.gram)
        weight = args.k
        if weight is None:
            lat.require_orthogonal_type()
            weight = lat.eisenstein_weight
        df = discriminant_form(lat)
        results = sweep(
            df,
            weight,
            args.N,
            list(iter_truncations(args.start_c, args.end_c)),
            max_den=args.max_den or default_max_den(),
            threads=default_threads(),
        )
    except (LatticeError, ValueError, OSError) as exc:
        print(f"Sweep failed: {exc}", file=sys.stderr)
        return 1

    stable_from = first_stable(results)
    if stable_from is None:
        print("\nThe reconstructed table did not stabilize; raise --end-c.", file=sys.stderr)
        return 1
    print(f"\nReconstructed table is stable from C = {stable_from}.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
