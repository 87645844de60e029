# SPDX-License-Identifier: Apache-2.0
import json
import os
import pathlib

import pytest

import qtlcheck

DATA = pathlib.Path(os.environ.get("QTL_DATA_DIR", pathlib.Path(__file__).parents[2] / "data"))


@pytest.fixture(scope="module")
def program():
    return qtlcheck.compile_source((DATA / "example1.qw").read_text())


@pytest.fixture(scope="module")
def atoms():
    return json.loads((DATA / "atoms.json").read_text())


def test_compile_gives_four_locations(program):
    assert program["locations"] == ["l1", "l2", "l3", "l4"]
    assert program["exit_location"] == "l4"


def test_invariant_holds(program, atoms):
    v = qtlcheck.check(program, "[] p", atoms)
    assert v["status"] == "Valid"
    assert v["procedure"] == "check_invariance"


def test_exit_never_certain_but_almost_sure(program, atoms):
    assert qtlcheck.check(program, "<> exit0", atoms)["status"] == "NotValid"
    assert qtlcheck.check(program, "<>~ exit0", atoms)["status"] == "Valid"


def test_reach_reports_expected_steps(program):
    r = qtlcheck.reach(program)
    assert r["exit_trace"] == "1"
    assert r["almost_terminates"]
    assert r["expected_steps"] == pytest.approx(4.0, abs=1e-9)


def test_simulate_second_step(program):
    states = qtlcheck.simulate(program, 2)
    assert set(states[2]) == {"l3", "l4"}
    assert states[2]["l4"]["trace"] == "1/2"


def test_library_errors_are_raised(atoms):
    with pytest.raises(qtlcheck.QtlError):
        qtlcheck.compile_source("apply Missing to q")
