import random
from fractions import Fraction

import pytest

from atscalc.adversary.spring import SpringParams
from atscalc.verify.experiments import spring_ir_config


@pytest.fixture
def unit_spring():
    """r = b = 1, D = 43/50, d = 17/20, ε = 1/20, so I = 1 and τ = 23/10."""
    return SpringParams.direct(1, 1, Fraction(43, 50), Fraction(17, 20), Fraction(1, 20))


@pytest.fixture
def unit_spring_ir(unit_spring):
    return spring_ir_config(unit_spring)


@pytest.fixture
def rng():
    return random.Random("atscalc-tests")


@pytest.fixture(autouse=True)
def _work_in_tmp(tmp_path, monkeypatch):
    # the CLI and the loggers write relative paths
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("ATSCALC_OUT_DIR", raising=False)
    monkeypatch.delenv("ATSCALC_SEED", raising=False)
    monkeypatch.delenv("ATSCALC_WORKERS", raising=False)
