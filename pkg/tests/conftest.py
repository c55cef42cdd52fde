"""Shared fixtures: the full-scale experiment bundles behind the
acceptance suite. Each trains once per session, on first use, from the
same JSON presets that ship in configs/.
"""

import dataclasses
import time
from pathlib import Path

import pytest

from teachkit.harness.config import ExperimentConfig
from teachkit.harness.experiment import run_experiment

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _run_preset(name, tmp_path_factory):
    config = ExperimentConfig.from_json(CONFIG_DIR / f"{name}.json")
    out = tmp_path_factory.mktemp(name)
    config = dataclasses.replace(config, out_dir=str(out))
    start = time.monotonic()
    summary = run_experiment(config)
    return {
        "summary": summary,
        "out": out,
        "checkpoint": out / "checkpoint",
        "seconds": time.monotonic() - start,
    }


@pytest.fixture(scope="session")
def rectangle_br_bundle(tmp_path_factory):
    return _run_preset("rectangle_br", tmp_path_factory)


@pytest.fixture(scope="session")
def bimodal_br_bundle(tmp_path_factory):
    return _run_preset("bimodal_br", tmp_path_factory)


@pytest.fixture(scope="session")
def boolean_br_bundle(tmp_path_factory):
    return _run_preset("boolean_br", tmp_path_factory)


@pytest.fixture(scope="session")
def boolean_joint_bundle(tmp_path_factory):
    return _run_preset("boolean_joint", tmp_path_factory)


@pytest.fixture(scope="session")
def hierarchy_br_bundle(tmp_path_factory):
    return _run_preset("hierarchy_br", tmp_path_factory)


@pytest.fixture(scope="session")
def hierarchy_joint_bundle(tmp_path_factory):
    return _run_preset("hierarchy_joint", tmp_path_factory)
