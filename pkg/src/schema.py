# Schema definitions for coefficient tables (see docs/tables.md)

RATIONAL = r"[-+]?\d+(?:/\d+)?"
DECIMAL = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
INTEGER = r"[-+]?\d+"
# "(0, 1, 0)", "[0;1;0]", "0 1 0", and "()" for the trivial group
ALPHA = r"[\(\[]?\s*(?:\d+(?:\s*[,; ]\s*\d+)*)?\s*[\)\]]?"

COEFFICIENT_COLUMNS: list[str] = ["alpha", "n", "c"]
BASIS_COLUMNS: list[str] = ["form", *COEFFICIENT_COLUMNS]


SCHEMAS: dict[str, dict] = {
    # numeric Eisenstein output or any holomorphic table, floats allowed
    "fourier": {
        "columns": COEFFICIENT_COLUMNS,
        "not_null": ["n", "c"],
        "validations": {
            "alpha": {"type": "coordinates", "pattern": rf"^{ALPHA}$"},
            "n": {"type": "rational", "pattern": rf"^{RATIONAL}$"},
            "c": {"type": "number", "pattern": rf"^(?:{RATIONAL}|{DECIMAL})$"},
        },
        "sign": "nonnegative",
        "integral": False,
    },
    "fourier_exact": {
        "columns": COEFFICIENT_COLUMNS,
        "not_null": ["n", "c"],
        "validations": {
            "alpha": {"type": "coordinates", "pattern": rf"^{ALPHA}$"},
            "n": {"type": "rational", "pattern": rf"^{RATIONAL}$"},
            "c": {"type": "rational", "pattern": rf"^{RATIONAL}$"},
        },
        "sign": "nonnegative",
        "integral": False,
    },
    "principal_part": {
        "columns": COEFFICIENT_COLUMNS,
        "not_null": ["n", "c"],
        "validations": {
            "alpha": {"type": "coordinates", "pattern": rf"^{ALPHA}$"},
            "n": {"type": "rational", "pattern": rf"^{RATIONAL}$"},
            "c": {"type": "integer", "pattern": rf"^{INTEGER}$"},
        },
        "sign": "negative",
        "integral": True,
    },
    "basis": {
        "columns": BASIS_COLUMNS,
        "not_null": ["form", "n", "c"],
        "validations": {
            "form": {"type": "integer", "pattern": r"^\d+$"},
            "alpha": {"type": "coordinates", "pattern": rf"^{ALPHA}$"},
            "n": {"type": "rational", "pattern": rf"^{RATIONAL}$"},
            "c": {"type": "integer", "pattern": rf"^{INTEGER}$"},
        },
        "sign": "nonnegative",
        "integral": True,
    },
}
