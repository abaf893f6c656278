import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
for path in (os.path.join(ROOT, "src"), ROOT):
    if path not in sys.path:
        sys.path.insert(0, path)

from stage1_program.parser import load_program, parse_facts  # noqa: E402
from stage5_benchmark.instance_generator import gen_3cc, gen_hcp  # noqa: E402
from utils.config import Config  # noqa: E402


@pytest.fixture(scope="session")
def house():
    return load_program(Config.encoding_path("house.asp"))


@pytest.fixture(scope="session")
def three_cc():
    return load_program(Config.encoding_path("3cc.asp"))


@pytest.fixture
def crowded_house():
    """Two persons, one thing each, a single cabinet: every room choice clashes."""
    return parse_facts(gen_hcp(2, 1, 1, 2))


@pytest.fixture
def short_chain():
    return parse_facts(gen_3cc(1, satisfiable=True))
