"""Named Cayley tables shipped with the package."""
from __future__ import annotations

import json
from importlib import resources

from .algebra import CayleyTable
from .errors import SchemaError

FIXTURES = ("paper-latin-12", "paper-table-8")


def fixture_dict(name: str) -> dict:
    if name not in FIXTURES:
        raise SchemaError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    text = resources.files("algca").joinpath("data", f"{name}.json").read_text()
    return json.loads(text)


def load_fixture(name: str) -> CayleyTable:
    """``paper-latin-12``: a 12-element medial quasigroup. ``paper-table-8``: an 8-element right-cancellable table."""
    d = fixture_dict(name)
    return CayleyTable.from_rows(d["symbols"], d["table"])
