"""Shared fixtures: one cached CLI run per bundled scenario, CSV readers."""

import csv
import json
import os

import pytest

from prft import cli

BUNDLED = [
    "coherence_optical",
    "coherence_radio",
    "protocol_desk",
    "purity_floquet",
    "purity_superposition",
    "rabi_cumulants",
    "rabi_negativity_fast",
    "rabi_negativity_slow",
    "three_mode_counting",
    "transfer_500km",
    "two_mode_exchange",
    "two_mode_validation_grid",
]


@pytest.fixture(scope="session")
def scenario_run(tmp_path_factory):
    """Run a bundled scenario once per session; returns (out_dir, summary)."""
    cache = {}

    def run(name):
        if name not in cache:
            scenario = cli._load_scenario(name)
            out_dir = tmp_path_factory.mktemp(f"run_{name}")
            summary = cli.run_scenario(scenario, str(out_dir))
            cache[name] = (str(out_dir), summary)
        return cache[name]

    return run


def read_table(out_dir, filename):
    """CSV rows as dicts of strings (floats converted by the caller)."""
    with open(os.path.join(out_dir, filename), newline="") as fh:
        return list(csv.DictReader(fh))


def read_manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)


def rows_where(rows, **filters):
    """Rows whose string-valued columns equal the given values exactly."""
    out = []
    for row in rows:
        if all(row[key] == value for key, value in filters.items()):
            out.append(row)
    return out


def column(rows, key):
    return [float(row[key]) for row in rows]
