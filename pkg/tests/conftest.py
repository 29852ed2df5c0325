from __future__ import annotations

import shutil
from fractions import Fraction as F
from importlib import resources
from pathlib import Path

import pytest

from esmck.ir import lower_evolve, parse_program
from esmck.solve import Witness

CORPUS = Path(str(resources.files("esmck.corpus")))
GOLDEN = Path(__file__).parent / "golden"
Z3 = shutil.which("z3")

needs_z3 = pytest.mark.skipif(Z3 is None, reason="z3 binary not installed")


def load_lowered(variant: str):
    return lower_evolve(parse_program((CORPUS / f"kpp_{variant}.hsl").read_text()))


@pytest.fixture(scope="session")
def defective():
    return load_lowered("defective")


@pytest.fixture(scope="session")
def repaired():
    return load_lowered("repaired")


def documented_witness() -> Witness:
    """Regression witness: D=2, zw=1, w=1, dt=1/2, alpha=1/2 twice, nu=1, dnu=-100 in iteration 2."""
    a = {
        "dt": F(1, 2), "zw": F(1), "D": F(2), "w": F(1),
        # initial havocs; only nu, zCr and K are constrained
        "nu.0": F(1), "dnu.0": F(0), "h.0": F(0), "sigma.0": F(0), "alpha.0": F(0),
        "zCr.0": F(1), "K.0": F(1), "a2.0": F(0), "a3.0": F(0),
        "alpha.1": F(1, 2), "nu.1": F(1), "dnu.1": F(0),
        "alpha.2": F(1, 2), "nu.2": F(1), "dnu.2": F(-100),
    }
    return Witness(a, "K>0", {"N": 2, "M": 1}, (0, 0))
