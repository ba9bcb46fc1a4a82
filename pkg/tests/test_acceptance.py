"""Acceptance criteria of the thm-schw-l1 preset, one test per criterion.

Runs each evolution once (about 10 minutes on one core) and prints one
pass/fail line per criterion.  Artifacts go under ``$MAXTAILS_OUTPUT_ROOT``
when it is set, else into a temporary directory.
"""
import os
from pathlib import Path

import pytest

from maxwell_tails import presets, runner


@pytest.fixture(scope="module")
def results(request, tmp_path_factory):
    rep = request.config.pluginmanager.get_plugin("terminalreporter")

    def log(msg):
        if rep is not None:
            rep.write_line(msg)
        else:
            print(msg)

    if os.environ.get(runner.OUTPUT_ROOT_ENV):
        root = runner.output_root() / "thm-schw-l1"
    else:
        root = tmp_path_factory.mktemp("thm-schw-l1")
    log("")
    log(f"acceptance artifacts: {root}")
    out = presets.run_preset("thm-schw-l1", root=Path(root), log=log)
    return {(r.number, r.title): r for r in out}


def _get(results, number, halved=False):
    hits = [r for (n, t), r in results.items() if n == number and t.startswith("dissipation halved") == halved]
    assert hits, f"criterion {number} not evaluated"
    return hits


@pytest.mark.parametrize("number", sorted(presets.CRITERIA))
def test_criterion(results, number):
    (r,) = _get(results, number)
    assert r.passed, r.line()


@pytest.mark.parametrize("number", [1, 2, 4])
def test_criterion_with_dissipation_halved(results, number):
    for r in _get(results, number, halved=True):
        assert r.passed, r.line()
