#!/usr/bin/env python3
"""Command-line frontend: lattices, Weil matrices, Eisenstein series and congruences."""

from __future__ import annotations

import argparse
import re
import sys
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from src.congruence import (
    congruence_solve,
    constant_term,
    lift_weight,
    obstruction_check,
    stabilization_rank,
    verify_congruence,
)
from src.eisenstein import fourier_coeffs_E, rationalize
from src.env import (
    DEFAULT_MAX_C,
    DEFAULT_MAX_DEN,
    DEFAULT_THREADS,
    DEFAULT_TOLERANCE,
    default_max_c,
    default_max_den,
    default_threads,
    default_tolerance,
    load_env,
)
from src.lattice import (
    DiscriminantForm,
    Lattice,
    discriminant_form,
    gauss_sum,
    load_gram,
    milgram_check,
)
from src.metaplectic import MetaplecticElement, Word, evaluate_word
from src.selftest import run_selftest
from src.tables import dump_json, load_basis, load_fourier_table, load_principal_part, save_table
from src.weil import central_phase, rho, rho_dual

COMMANDS = (
    "lattice-info",
    "weil-matrix",
    "eisenstein",
    "obstruct",
    "congruence",
    "selftest",
    "stabilize",
    "constant-term",
)

_LETTER = re.compile(r"^([ST])(?:\^?([-+]?\d+))?$")


@dataclass(frozen=True)
class Config:
    command: str
    gram: Path | None = None
    ppart: Path | None = None
    cusps: Path | None = None
    eisenstein: Path | None = None
    out: Path | None = None
    weight: Fraction | None = None
    N: Fraction | None = None
    C: int | None = None
    samples: int | None = None
    max_den: int = DEFAULT_MAX_DEN
    tolerance: float = DEFAULT_TOLERANCE
    max_c: int = DEFAULT_MAX_C
    d: int | None = None
    threads: int = DEFAULT_THREADS
    word: str | None = None
    matrix: str | None = None
    dual: bool = False
    numeric: bool = False
    extrapolate: bool = False
    seed: int = 0
    as_json: bool = False
    verbose: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"Unknown subcommand {self.command!r}")
        for name in ("C", "samples", "max_den", "max_c", "d", "threads"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"--{name.replace('_', '-')} must be positive, got {value}")
        if self.N is not None and self.N < 0:
            raise ValueError(f"--N must be non-negative, got {self.N}")
        if not 0 < self.tolerance < 1e-2:
            raise ValueError(f"--tolerance must lie in (0, 1e-2), got {self.tolerance}")

        required = {
            "lattice-info": ("gram",),
            "weil-matrix": ("gram",),
            "eisenstein": ("gram", "N"),
            "obstruct": ("ppart", "cusps"),
            "congruence": ("eisenstein", "d", "cusps", "N"),
            "stabilize": ("cusps", "N"),
            "constant-term": ("ppart", "eisenstein"),
            "selftest": (),
        }[self.command]
        for name in required:
            if getattr(self, name) is None:
                flag = "--E" if name == "eisenstein" else f"--{name}"
                raise ValueError(f"{self.command} requires {flag}")
        if self.command == "weil-matrix" and (self.word is None) == (self.matrix is None):
            raise ValueError("weil-matrix needs exactly one of --word or --matrix")


def parse_truncation(text: str) -> int | None:
    """--C value: a positive integer, or ``auto`` for adaptive doubling."""
    if text.strip().lower() == "auto":
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Weil representation, vector-valued Eisenstein series and their congruences.",
    )
    parser.add_argument("command", choices=COMMANDS, help="Subcommand to run.")
    parser.add_argument("--gram", type=Path, help="Gram matrix file (JSON, CSV or XLSX).")
    parser.add_argument("--ppart", type=Path, help="Principal part table.")
    parser.add_argument("--cusps", type=Path, help="Cusp form basis table.")
    parser.add_argument("--E", dest="eisenstein", type=Path, help="Eisenstein series table.")
    parser.add_argument("--out", type=Path, help="Write the result here instead of stdout.")
    parser.add_argument("--k", dest="weight", type=Fraction, help="Weight (default 1 + l/2).")
    parser.add_argument("--N", type=Fraction, help="Depth of Fourier tables.")
    parser.add_argument(
        "--C", type=parse_truncation, help="Coset truncation, or auto for adaptive (default)."
    )
    parser.add_argument("--samples", type=int, help="FFT sample count.")
    parser.add_argument("--max-den", type=int, help="Largest denominator for reconstruction.")
    parser.add_argument("--tolerance", type=float, help="Relative tolerance for adaptive C.")
    parser.add_argument("--max-c", type=int, help="Cap for adaptive C.")
    parser.add_argument("--d", type=int, help="Modulus of the congruence.")
    parser.add_argument("--threads", type=int, help="Worker threads for coset sums.")
    parser.add_argument("--word", help="Word in S and T, e.g. 'S T^-2 S'.")
    parser.add_argument("--matrix", help="Metaplectic element a,b,c,d[,sign].")
    parser.add_argument("--dual", action="store_true", help="Use the dual representation.")
    parser.add_argument("--numeric", action="store_true", help="Skip rational reconstruction.")
    parser.add_argument(
        "--extrapolate",
        action="store_true",
        help="Smooth cutoff with Richardson steps over C/8 .. C (even C).",
    )
    parser.add_argument("--seed", type=int, default=0, help="Seed for selftest sampling.")
    parser.add_argument("--json", dest="as_json", action="store_true", help="JSON output.")
    parser.add_argument(
        "--env-file",
        default=".env",
        help="Path to the .env file with WEILREP_* defaults (default: .env)",
    )
    parser.add_argument("--verbose", action="store_true", help="Progress lines on stderr.")
    return parser


def config_from_args(args: argparse.Namespace) -> Config:
    load_env(args.env_file)
    return Config(
        command=args.command,
        gram=args.gram,
        ppart=args.ppart,
        cusps=args.cusps,
        eisenstein=args.eisenstein,
        out=args.out,
        weight=args.weight,
        N=args.N,
        C=args.C,
        samples=args.samples,
        max_den=args.max_den if args.max_den is not None else default_max_den(),
        tolerance=args.tolerance if args.tolerance is not None else default_tolerance(),
        max_c=args.max_c if args.max_c is not None else default_max_c(),
        d=args.d,
        threads=args.threads if args.threads is not None else default_threads(),
        word=args.word,
        matrix=args.matrix,
        dual=args.dual,
        numeric=args.numeric,
        extrapolate=args.extrapolate,
        seed=args.seed,
        as_json=args.as_json,
        verbose=args.verbose,
    )


def parse_word(text: str) -> Word:
    letters = []
    for token in re.split(r"[\s*]+", text.strip()):
        if not token:
            continue
        match = _LETTER.match(token)
        if match is None:
            raise ValueError(f"Cannot parse {token!r} as a power of S or T")
        letters.append((match.group(1), int(match.group(2) or 1)))
    return tuple(letters)


def parse_element(text: str) -> MetaplecticElement:
    parts = [int(v) for v in text.split(",")]
    if len(parts) not in (4, 5):
        raise ValueError(f"--matrix expects a,b,c,d[,sign], got {text!r}")
    return MetaplecticElement(*parts)


def format_complex(z: complex) -> str:
    re_part = 0.0 if abs(z.real) < 1e-12 else z.real
    im_part = 0.0 if abs(z.imag) < 1e-12 else z.imag
    return f"{re_part:g}{im_part:+g}i"


class Runner:
    def __init__(self, config: Config):
        self.config = config

    def progress(self, message: str) -> None:
        if self.config.verbose:
            print(f"  - {message}", file=sys.stderr)

    def emit(self, payload: dict[str, Any] | str) -> None:
        text = payload if isinstance(payload, str) else dump_json(payload)
        if not text.endswith("\n"):
            text += "\n"
        if self.config.out is None:
            sys.stdout.write(text)
        else:
            self.config.out.write_text(text)
            self.progress(f"Wrote {self.config.out}")

    def lattice(self) -> tuple[Lattice, DiscriminantForm]:
        assert self.config.gram is not None
        lat = load_gram(self.config.gram)
        df = discriminant_form(lat)
        self.progress(f"Discriminant group of order {df.size}, level {df.level}")
        return lat, df

    def optional_df(self) -> DiscriminantForm | None:
        return self.lattice()[1] if self.config.gram is not None else None

    def run(self) -> int:
        handler = getattr(self, "cmd_" + self.config.command.replace("-", "_"))
        return handler()

    def cmd_lattice_info(self) -> int:
        lat, df = self.lattice()
        g = gauss_sum(df)
        payload = {
            "signature": [lat.sig_pos, lat.sig_neg],
            "orthogonal_type": lat.is_orthogonal_type,
            "df": df.to_json(),
            "gauss_sum": format_complex(g.embed()),
            "gauss_sum_exact": g.to_json(),
            "milgram": milgram_check(lat),
        }
        if self.config.as_json:
            self.emit(payload)
            return 0
        lines = [
            f"signature: ({lat.sig_pos},{lat.sig_neg})",
            f"|L'/L| = {df.size}",
            df.to_text(),
            f"Gauss sum: {format_complex(g.embed())} = {g}",
            f"Milgram formula holds: {payload['milgram']}",
        ]
        self.emit("\n".join(lines))
        return 0

    def cmd_weil_matrix(self) -> int:
        _, df = self.lattice()
        if self.config.word is not None:
            element = evaluate_word(parse_word(self.config.word))
        else:
            assert self.config.matrix is not None
            element = parse_element(self.config.matrix)
        matrix = rho_dual(df, element) if self.config.dual else rho(df, element)
        phase, shaped = central_phase(df)
        self.emit(
            {
                "element": list(element.key),
                "dual": self.config.dual,
                "df": df.to_json(),
                "rho": matrix.to_json(),
                "central_phase": str(phase),
                "central_phase_shape": shaped,
            }
        )
        return 0

    def cmd_eisenstein(self) -> int:
        lat, df = self.lattice()
        config = self.config
        weight = config.weight
        if weight is None:
            lat.require_orthogonal_type()
            weight = lat.eisenstein_weight
        assert config.N is not None
        self.progress(f"Computing E of weight {weight} to depth {config.N}")
        table = fourier_coeffs_E(
            df,
            weight,
            config.N,
            config.C,
            config.samples,
            tolerance=config.tolerance,
            max_truncation=config.max_c,
            extrapolate=config.extrapolate,
            threads=config.threads,
            progress=self.progress if config.verbose else None,
        )
        d = None
        if not config.numeric:
            table, d = rationalize(table, config.max_den)
            self.progress(f"Denominator of E: {d}")
        if config.out is not None and config.out.suffix.lower() in {".csv", ".xlsx"}:
            save_table(table, config.out, df)
            self.progress(f"Wrote {config.out}")
            return 0
        payload = table.to_json(df)
        if d is not None:
            payload["d"] = d
        self.emit(payload)
        return 0

    def cmd_obstruct(self) -> int:
        df = self.optional_df()
        assert self.config.ppart is not None and self.config.cusps is not None
        p = load_principal_part(self.config.ppart, df)
        cusps = load_basis(self.config.cusps, df)
        result = obstruction_check(p, cusps)
        self.emit(result.to_json())
        return 0

    def cmd_congruence(self) -> int:
        df = self.optional_df()
        config = self.config
        assert config.eisenstein is not None and config.cusps is not None
        assert config.d is not None and config.N is not None
        E = load_fourier_table(config.eisenstein, df)
        cusps = load_basis(config.cusps, df)
        report = stabilization_rank(cusps, config.N)
        if not report.stable:
            self.progress(f"Basis rank {report.rank} < {report.forms} forms at N = {config.N}")
        solution = congruence_solve(E, config.d, cusps, config.N)
        failure = verify_congruence(solution, E, config.d, cusps)
        payload = solution.to_json()
        payload["verified"] = failure is None
        payload["stable"] = report.stable
        self.emit(payload)
        return 0

    def cmd_stabilize(self) -> int:
        df = self.optional_df()
        assert self.config.cusps is not None and self.config.N is not None
        report = stabilization_rank(load_basis(self.config.cusps, df), self.config.N)
        self.emit(report.to_json())
        return 0

    def cmd_constant_term(self) -> int:
        df = self.optional_df()
        config = self.config
        assert config.ppart is not None and config.eisenstein is not None
        p = load_principal_part(config.ppart, df)
        E = load_fourier_table(config.eisenstein, df)
        cusps = load_basis(config.cusps, df) if config.cusps is not None else None
        value = constant_term(p, E, cusps)
        payload: dict[str, Any] = {"constant_term": str(value)}
        if value.denominator == 1:
            payload["lift_weight"] = str(lift_weight(p, E))
        self.emit(payload)
        return 0

    def cmd_selftest(self) -> int:
        report = run_selftest(seed=self.config.seed, progress=self.progress)
        self.emit(report.to_json() if self.config.as_json else report.to_text())
        return 0 if report.passed else 1


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        config = config_from_args(args)
        config.validate()
    except ValueError as exc:
        print(f"Usage error: {exc}", file=sys.stderr)
        return 2

    try:
        return Runner(config).run()
    except (ValueError, RuntimeError, ArithmeticError, OSError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(run())
