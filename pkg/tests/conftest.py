import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from util import CORPUS, fixture_bytes

from crashscope.analysis import load_app_ir
from crashscope.simulator import SimulatorPort, load_app_model


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS


@pytest.fixture()
def login_model():
    return load_app_model(fixture_bytes("two_screen_login", "model.json"))


@pytest.fixture()
def login_ir():
    return load_app_ir(fixture_bytes("two_screen_login", "ir.json"))


@pytest.fixture()
def login_session(login_model):
    return SimulatorPort(login_model).launch()


@pytest.fixture()
def wizard_model():
    return load_app_model(fixture_bytes("deep_linear", "model.json"))


@pytest.fixture()
def dual_model():
    return load_app_model(fixture_bytes("dual_path_crashes", "model.json"))
