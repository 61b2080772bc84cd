"""Coefficient tables: Fourier tables, principal parts and bases of forms.

JSON is the canonical interchange format. Hand-prepared tables may also be
CSV or Excel with one row per coefficient (columns alpha, n, c and, for
bases, form). Every source goes through the same pandas validation, which
splits rows into a clean frame and an invalid frame carrying
``_row_number``, ``_error`` and ``_category`` (the kinds of fault, "; "-joined).
"""

from __future__ import annotations

import json
import re
import unicodedata
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, ClassVar

import pandas as pd

from src.lattice import DfElement, DiscriminantForm, qvalue
from src.schema import SCHEMAS

Key = tuple[DfElement, Fraction]
Number = Fraction | float


class TableError(ValueError):
    pass


_ALPHA_SPLIT = re.compile(r"[,; ]+")
_RATIONAL = re.compile(r"^[-+]?\d+(?:/\d+)?$")


def parse_alpha(value: Any) -> DfElement | None:
    if isinstance(value, list | tuple):
        return tuple(int(v) for v in value)
    if value is None or pd.isna(value):
        return ()
    text = unicodedata.normalize("NFKC", str(value)).strip().strip("()[]").strip()
    if not text:
        return ()
    try:
        return tuple(int(part) for part in _ALPHA_SPLIT.split(text))
    except ValueError:
        return None


def format_alpha(alpha: Sequence[int]) -> str:
    return "(" + ",".join(str(int(c)) for c in alpha) + ")"


def parse_rational(value: Any) -> Fraction | None:
    if value is None or pd.isna(value):
        return None
    text = str(value).strip()
    if not _RATIONAL.match(text):
        return None
    return Fraction(text)


def parse_number(value: Any) -> Number | None:
    exact = parse_rational(value)
    if exact is not None:
        return exact
    try:
        return float(str(value).strip())
    except ValueError:
        return None


def format_number(value: Number) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(float(value))


def _key(alpha: Sequence[int], n: Fraction | int | str) -> Key:
    return tuple(int(c) for c in alpha), Fraction(n)


@dataclass(frozen=True)
class FourierTable:
    weight: Fraction
    orders: tuple[int, ...]
    coeffs: dict[Key, Number]
    depth: Fraction
    # True when the table transforms with the dual representation (n in Z - q(alpha))
    dual: bool = True
    cusp: bool = False
    errors: dict[Key, float] = field(default_factory=dict)

    def coefficient(self, alpha: Sequence[int], n: Fraction | int) -> Number:
        return self.coeffs.get(_key(alpha, n), Fraction(0))

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.coeffs.values())

    def indices(self) -> list[Key]:
        return sorted(self.coeffs, key=lambda key: (key[1], key[0]))

    def scaled(self, factor: Fraction | int) -> FourierTable:
        factor = Fraction(factor)
        return FourierTable(
            weight=self.weight,
            orders=self.orders,
            coeffs={key: value * factor for key, value in self.coeffs.items()},
            depth=self.depth,
            dual=self.dual,
            cusp=self.cusp,
            errors={key: err * abs(float(factor)) for key, err in self.errors.items()},
        )

    def truncated(self, depth: Fraction | int) -> FourierTable:
        depth = Fraction(depth)
        if depth > self.depth:
            raise TableError(f"Cannot truncate a table of depth {self.depth} to depth {depth}")
        return FourierTable(
            weight=self.weight,
            orders=self.orders,
            coeffs={key: v for key, v in self.coeffs.items() if key[1] <= depth},
            depth=depth,
            dual=self.dual,
            cusp=self.cusp,
            errors={key: e for key, e in self.errors.items() if key[1] <= depth},
        )

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for alpha, n in self.indices():
            row = {
                "alpha": format_alpha(alpha),
                "n": str(n),
                "c": format_number(self.coeffs[(alpha, n)]),
            }
            if self.errors:
                row["error"] = repr(self.errors.get((alpha, n), 0.0))
            rows.append(row)
        return pd.DataFrame(rows, columns=["alpha", "n", "c", *(["error"] if self.errors else [])])

    def to_json(self, df: DiscriminantForm | None = None) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "k": str(self.weight),
            "df": df.to_json() if df is not None else {"orders": list(self.orders)},
            "dual": self.dual,
            "cusp": self.cusp,
            "N": str(self.depth),
            "coeffs": [],
        }
        for alpha, n in self.indices():
            entry: dict[str, Any] = {
                "alpha": list(alpha),
                "n": str(n),
                "c": format_number(self.coeffs[(alpha, n)]),
            }
            if (alpha, n) in self.errors:
                entry["error"] = self.errors[(alpha, n)]
            payload["coeffs"].append(entry)
        return payload


@dataclass(frozen=True)
class PrincipalPart:
    orders: tuple[int, ...]
    terms: dict[Key, int]

    @property
    def depth(self) -> Fraction:
        return max((-n for _, n in self.terms), default=Fraction(0))

    def to_json(self) -> dict[str, Any]:
        return {
            "df": {"orders": list(self.orders)},
            "N": str(self.depth),
            "coeffs": [
                {"alpha": list(alpha), "n": str(n), "c": str(self.terms[(alpha, n)])}
                for alpha, n in sorted(self.terms, key=lambda key: (key[1], key[0]))
            ],
        }


@dataclass(frozen=True)
class BasisTable:
    weight: Fraction
    orders: tuple[int, ...]
    forms: tuple[FourierTable, ...]
    depth: Fraction
    kind: str = "cusp"

    def to_json(self) -> dict[str, Any]:
        return {
            "k": str(self.weight),
            "kind": self.kind,
            "df": {"orders": list(self.orders)},
            "N": str(self.depth),
            "forms": [{"coeffs": form.to_json()["coeffs"]} for form in self.forms],
        }


class CoefficientTableReader:
    COLUMN_ALIASES: ClassVar[dict[str, str]] = {
        "alpha": "alpha",
        "component": "alpha",
        "element": "alpha",
        "gamma": "alpha",
        "beta": "alpha",
        "n": "n",
        "index": "n",
        "exponent": "n",
        "c": "c",
        "coefficient": "c",
        "coeff": "c",
        "value": "c",
        "form": "form",
        "form_index": "form",
        "basis_index": "form",
    }

    TYPE_DESCRIPTIONS: ClassVar[dict[str, str]] = {
        "coordinates": "a coordinate tuple",
        "rational": "a rational p/q",
        "number": "a rational or decimal number",
        "integer": "an integer",
    }

    def __init__(self, df: DiscriminantForm | None = None):
        self.df = df

    def read_frame(self, file_path: Path, kind: str) -> tuple[pd.DataFrame, dict[str, Any]]:
        """Load rows and table metadata from JSON, CSV or Excel."""
        suffix = file_path.suffix.lower()
        if suffix == ".json":
            payload = json.loads(file_path.read_text())
            if not isinstance(payload, dict):
                raise TableError(f"{file_path.name}: expected a JSON object")
            return self._frame_from_payload(payload, kind), payload

        frame = self._load_dataframe(file_path)
        return self._normalize_dataframe_columns(frame), {}

    def _load_dataframe(self, file_path: Path) -> pd.DataFrame:
        suffix = file_path.suffix.lower()
        if suffix == ".csv":
            return pd.read_csv(file_path, encoding="utf-8-sig", dtype=str)
        if suffix in {".xlsx", ".xls"}:
            return pd.read_excel(file_path, dtype=str)
        raise TableError(f"Unsupported file extension for {file_path.name}")

    @staticmethod
    def _frame_from_payload(payload: Mapping[str, Any], kind: str) -> pd.DataFrame:
        def rows_of(entries: Any, form: int | None) -> list[dict[str, Any]]:
            if not isinstance(entries, list):
                raise TableError("'coeffs' must be a list of {alpha, n, c} objects")
            rows = []
            for entry in entries:
                if not isinstance(entry, dict):
                    raise TableError(f"Malformed coefficient entry: {entry!r}")
                alpha = entry.get("alpha", [])
                row = {
                    "alpha": format_alpha(alpha) if isinstance(alpha, list) else alpha,
                    "n": None if entry.get("n") is None else str(entry["n"]),
                    "c": None if entry.get("c") is None else str(entry["c"]),
                }
                if form is not None:
                    row["form"] = str(form)
                rows.append(row)
            return rows

        if kind == "basis":
            forms = payload.get("forms", [])
            if not isinstance(forms, list):
                raise TableError("'forms' must be a list")
            rows = []
            for index, form in enumerate(forms):
                entries = form.get("coeffs", []) if isinstance(form, dict) else form
                rows.extend(rows_of(entries, index))
            return pd.DataFrame(rows, columns=["form", "alpha", "n", "c"], dtype=object)

        return pd.DataFrame(rows_of(payload.get("coeffs", []), None), columns=["alpha", "n", "c"])

    @staticmethod
    def _normalize_column_name(column_name: str) -> str:
        cleaned = str(column_name).strip().lower()
        cleaned = re.sub(r"[^a-z0-9]+", "_", cleaned)
        return re.sub(r"_+", "_", cleaned).strip("_")

    def _normalize_dataframe_columns(self, frame: pd.DataFrame) -> pd.DataFrame:
        rename_map = {}
        for column in frame.columns:
            normalized = self._normalize_column_name(column)
            rename_map[column] = self.COLUMN_ALIASES.get(normalized, normalized)
        return frame.rename(columns=rename_map)

    def validate(
        self,
        frame: pd.DataFrame,
        schema_name: str,
        *,
        dual: bool,
        depth: Fraction | None = None,
        cusp: bool = False,
    ) -> tuple[pd.DataFrame, pd.DataFrame]:
        """Split rows into (clean, invalid); clean rows carry parsed values."""
        schema = SCHEMAS[schema_name]
        df = frame.copy()
        for column in schema["columns"]:
            if column not in df.columns:
                df[column] = pd.NA
        df["_error"] = ""
        df["_category"] = ""
        df["_row_number"] = range(2, len(df) + 2)

        def append_error(mask: pd.Series, message: str, category: str) -> None:
            if mask.any():
                current = df.loc[mask, "_error"].fillna("").astype(str)
                df.loc[mask, "_error"] = current + message
                kinds = df.loc[mask, "_category"].fillna("").astype(str)
                df.loc[mask, "_category"] = kinds + category + "; "

        for column in schema["not_null"]:
            trimmed = df[column].astype("string").str.strip()
            null_mask = df[column].isna() | trimmed.fillna("").eq("")
            append_error(null_mask, f"NOT NULL violation: {column}; ", f"{column} missing")

        for column, validation in schema["validations"].items():
            trimmed = df[column].astype("string").str.strip()
            present = trimmed.notna() & trimmed.ne("")
            mismatch = present & ~trimmed.str.match(validation["pattern"], na=False)
            description = self.TYPE_DESCRIPTIONS[validation["type"]]
            append_error(
                mismatch, f"Invalid {column} (must be {description}); ", f"{column} malformed"
            )

        numeric_c = schema["validations"]["c"]["type"] == "number"
        parsed = pd.DataFrame(
            {
                "alpha": df["alpha"].map(parse_alpha),
                "n": df["n"].map(parse_rational),
                "c": df["c"].map(parse_number if numeric_c else parse_rational),
            },
            index=df.index,
        )

        domain = self._domain_errors(parsed, schema, dual=dual, depth=depth, cusp=cusp)
        for message, category, mask in domain:
            append_error(mask, message, category)

        key_columns = ["alpha", "n"]
        if "form" in df.columns:
            parsed["form"] = df["form"]
            key_columns = ["form", "alpha", "n"]
        keys = parsed[key_columns].apply(lambda row: repr(tuple(row)), axis=1)
        if not keys.empty:
            append_error(
                keys.duplicated(keep="first"), "Duplicate (alpha, n) index; ", "duplicate index"
            )

        df["_error"] = df["_error"].str.rstrip("; ")
        df["_category"] = df["_category"].str.rstrip("; ")

        existing = [column for column in schema["columns"] if column in df.columns]
        filtered = df[[*existing, "_error", "_category", "_row_number"]].copy()
        clean = filtered[filtered["_error"] == ""].copy()
        invalid = filtered[filtered["_error"] != ""].copy()

        if not clean.empty:
            for column in ("alpha", "n", "c"):
                clean[column] = parsed.loc[clean.index, column]
            if "form" in clean.columns:
                clean["form"] = clean["form"].astype(int)
            clean = clean.drop(columns=["_error", "_category", "_row_number"])

        return clean, invalid

    def _domain_errors(
        self,
        parsed: pd.DataFrame,
        schema: Mapping[str, Any],
        *,
        dual: bool,
        depth: Fraction | None,
        cusp: bool,
    ) -> list[tuple[str, str, pd.Series]]:
        """Checks that need parsed values: signs, depth, integrality, classes mod 1.

        Each entry is (message, category, mask of offending rows).
        """

        def rows(predicate: Callable[[Any], bool]) -> pd.Series:
            return parsed.apply(predicate, axis=1).astype(bool)

        def has_n(row: Any) -> bool:
            return row["n"] is not None

        errors: list[tuple[str, str, pd.Series]] = []
        if parsed.empty:
            return errors

        if schema["sign"] == "negative":
            errors.append(
                (
                    "Invalid n (principal part indices must be negative); ",
                    "n out of range",
                    rows(lambda row: has_n(row) and row["n"] >= 0),
                )
            )
        else:
            errors.append(
                (
                    "Invalid n (must be >= 0); ",
                    "n out of range",
                    rows(lambda row: has_n(row) and row["n"] < 0),
                )
            )

        if depth is not None:
            errors.append(
                (
                    f"Invalid n (beyond depth {depth}); ",
                    "n out of range",
                    rows(lambda row: has_n(row) and abs(row["n"]) > depth),
                )
            )

        if schema["integral"]:
            errors.append(
                (
                    "Invalid c (must be integral); ",
                    "c not integral",
                    rows(lambda row: isinstance(row["c"], Fraction) and row["c"].denominator != 1),
                )
            )

        if cusp:
            errors.append(
                (
                    "Invalid c (cusp table has a nonzero n = 0 coefficient); ",
                    "cusp constant term",
                    rows(lambda row: row["n"] == 0 and row["c"] is not None and row["c"] != 0),
                )
            )

        if self.df is None:
            return errors

        df = self.df
        orders = df.orders

        def well_shaped(row: Any) -> bool:
            return row["alpha"] is not None and len(row["alpha"]) == len(orders)

        def in_range(row: Any) -> bool:
            return well_shaped(row) and all(
                0 <= c < d for c, d in zip(row["alpha"], orders, strict=True)
            )

        sign = -1 if dual else 1
        relation = "n + q(alpha)" if dual else "n - q(alpha)"

        def wrong_class(row: Any) -> bool:
            if not in_range(row) or not has_n(row):
                return False
            return (row["n"] - sign * qvalue(df, row["alpha"])).denominator != 1

        errors.append(
            (
                f"Invalid alpha (expected {len(orders)} coordinates); ",
                "alpha out of range",
                rows(lambda row: row["alpha"] is not None and not well_shaped(row)),
            )
        )
        errors.append(
            (
                f"Invalid alpha (coordinates must satisfy 0 <= c < d for orders {list(orders)}); ",
                "alpha out of range",
                rows(lambda row: well_shaped(row) and not in_range(row)),
            )
        )
        errors.append(
            (f"Invalid n ({relation} must be an integer); ", "class mod 1", rows(wrong_class))
        )
        return errors

    def read(
        self,
        path: str | Path,
        schema_name: str,
        *,
        dual: bool = True,
        depth: Fraction | None = None,
        cusp: bool = False,
    ) -> tuple[pd.DataFrame, pd.DataFrame, dict[str, Any]]:
        file_path = Path(path)
        kind = "basis" if schema_name == "basis" else "coeffs"
        frame, meta = self.read_frame(file_path, kind)
        self._check_orders(meta, file_path)
        if depth is None and "N" in meta:
            depth = Fraction(str(meta["N"]))
        clean, invalid = self.validate(
            frame,
            schema_name,
            dual=bool(meta.get("dual", dual)),
            depth=depth,
            cusp=bool(meta.get("cusp", cusp)) or meta.get("kind") == "cusp",
        )
        return clean, invalid, meta

    def _check_orders(self, meta: Mapping[str, Any], file_path: Path) -> None:
        declared = _declared_orders(meta)
        if self.df is not None and declared is not None and declared != self.df.orders:
            raise TableError(
                f"{file_path.name}: table is for a discriminant group with orders "
                f"{list(declared)}, lattice gives {list(self.df.orders)}"
            )


def _declared_orders(meta: Mapping[str, Any]) -> tuple[int, ...] | None:
    block = meta.get("df")
    if isinstance(block, dict) and "orders" in block:
        return tuple(int(d) for d in block["orders"])
    return None


def _raise_on_invalid(invalid: pd.DataFrame, file_path: Path, max_rows: int = 5) -> None:
    if invalid.empty:
        return
    preview = invalid[["_row_number", "_error"]].head(max_rows).to_string(index=False)
    raise TableError(f"{file_path.name}: {len(invalid)} invalid rows\n{preview}")


def _orders(df: DiscriminantForm | None, meta: Mapping[str, Any]) -> tuple[int, ...]:
    if df is not None:
        return df.orders
    return _declared_orders(meta) or ()


def _weight(meta: Mapping[str, Any], weight: Fraction | None, file_path: Path) -> Fraction:
    if weight is not None:
        return Fraction(weight)
    if "k" not in meta:
        raise TableError(f"{file_path.name}: weight k is not recorded; pass it explicitly")
    return Fraction(str(meta["k"]))


def _depth(meta: Mapping[str, Any], clean: pd.DataFrame) -> Fraction:
    if "N" in meta:
        return Fraction(str(meta["N"]))
    if clean.empty:
        return Fraction(0)
    return max(abs(Fraction(n)) for n in clean["n"])


def load_fourier_table(
    path: str | Path,
    df: DiscriminantForm | None = None,
    *,
    weight: Fraction | None = None,
    exact: bool = True,
    dual: bool = True,
) -> FourierTable:
    file_path = Path(path)
    reader = CoefficientTableReader(df)
    schema_name = "fourier_exact" if exact else "fourier"
    clean, invalid, meta = reader.read(file_path, schema_name, dual=dual)
    _raise_on_invalid(invalid, file_path)

    coeffs: dict[Key, Number] = {
        _key(row.alpha, row.n): row.c  # type: ignore[misc]
        for row in clean.itertuples(index=False)
    }
    return FourierTable(
        weight=_weight(meta, weight, file_path),
        orders=_orders(df, meta),
        coeffs=coeffs,
        depth=_depth(meta, clean),
        dual=bool(meta.get("dual", dual)),
        cusp=bool(meta.get("cusp", False)),
    )


def load_principal_part(path: str | Path, df: DiscriminantForm | None = None) -> PrincipalPart:
    file_path = Path(path)
    reader = CoefficientTableReader(df)
    clean, invalid, meta = reader.read(file_path, "principal_part", dual=False)
    _raise_on_invalid(invalid, file_path)
    terms = {
        _key(row.alpha, row.n): int(row.c)  # type: ignore[arg-type]
        for row in clean.itertuples(index=False)
    }
    return PrincipalPart(orders=_orders(df, meta), terms={k: v for k, v in terms.items() if v})


def load_basis(
    path: str | Path,
    df: DiscriminantForm | None = None,
    *,
    weight: Fraction | None = None,
    kind: str = "cusp",
) -> BasisTable:
    file_path = Path(path)
    reader = CoefficientTableReader(df)
    clean, invalid, meta = reader.read(file_path, "basis", dual=True, cusp=kind == "cusp")
    _raise_on_invalid(invalid, file_path)

    kind = str(meta.get("kind", kind))
    k = _weight(meta, weight, file_path)
    orders = _orders(df, meta)
    depth = _depth(meta, clean)
    declared_forms = meta.get("forms")
    count = len(declared_forms) if isinstance(declared_forms, list) else 0
    if not clean.empty:
        count = max(count, int(clean["form"].max()) + 1)

    forms = []
    for index in range(count):
        coeffs: dict[Key, Number] = {}
        if not clean.empty:
            for row in clean[clean["form"] == index].itertuples(index=False):
                coeffs[_key(row.alpha, row.n)] = row.c  # type: ignore[arg-type]
        forms.append(
            FourierTable(
                weight=k,
                orders=orders,
                coeffs=coeffs,
                depth=depth,
                dual=True,
                cusp=kind == "cusp",
            )
        )
    return BasisTable(weight=k, orders=orders, forms=tuple(forms), depth=depth, kind=kind)


def dump_json(payload: Mapping[str, Any]) -> str:
    """Stable JSON text; identical inputs give byte-identical output."""
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_table(table: FourierTable, path: str | Path, df: DiscriminantForm | None = None) -> Path:
    file_path = Path(path)
    suffix = file_path.suffix.lower()
    if suffix == ".json":
        file_path.write_text(dump_json(table.to_json(df)))
    elif suffix == ".csv":
        table.to_frame().to_csv(file_path, index=False, encoding="utf-8")
    elif suffix == ".xlsx":
        table.to_frame().to_excel(file_path, index=False)
    else:
        raise TableError(f"Unsupported output extension for {file_path.name}")
    return file_path
