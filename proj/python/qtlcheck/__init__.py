# SPDX-License-Identifier: Apache-2.0
"""Python front-end for the qtl model checker.

Programs and atoms are passed as JSON-compatible dicts (or JSON text) and
results come back as dicts with the same layout as ``qtl --json``.
"""

import json as _json

from ._qtl import QtlError
from . import _qtl

__all__ = ["QtlError", "compile_source", "check", "reach", "simulate"]


def _text(doc):
    return doc if isinstance(doc, str) else _json.dumps(doc)


def compile_source(source, normal_form=False):
    return _json.loads(_qtl.compile_source(source, normal_form))


def check(program, formula, atoms=None, tolerance=1e-9, period_bound=64, depth=12):
    atoms_text = "" if atoms is None else _text(atoms)
    return _json.loads(
        _qtl.check(_text(program), atoms_text, formula, tolerance, period_bound, depth)
    )


def reach(program, tolerance=1e-9):
    return _json.loads(_qtl.reach(_text(program), tolerance))


def simulate(program, steps):
    return _json.loads(_qtl.simulate(_text(program), steps))
