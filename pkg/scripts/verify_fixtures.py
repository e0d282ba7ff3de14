"""Characterize every scenario fixture and compare with the expected verdict."""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from engine.errors import NormcharError  # noqa: E402
from engine.formats import load_scenario  # noqa: E402
from engine.symbolic import characterize, characterize_prop2, characterize_vector  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")

# name -> (mode, expected verdict or "error")
EXPECTED = {
    "gaussian.json": ("single", "Characterized"),
    "skewed.json": ("single", "Violated"),
    "covariance.json": ("single", "Violated"),
    "degenerate.json": ("single", "error"),
    "discrete_product.json": ("single", "Violated"),
    "prop2_gaussian.json": ("prop2", "Characterized"),
    "prop2_xxy.json": ("prop2", "Violated"),
    "prop2_xyy.json": ("prop2", "Violated"),
    "vector_gaussian.json": ("vector", "Characterized"),
}


def verify_fixtures() -> bool:
    print("--- normchar fixture verification ---")
    ok = True
    for name, (mode, expected) in EXPECTED.items():
        try:
            spec = load_scenario(os.path.join(FIXTURES, name)).to_spec()
            run = {"single": characterize, "prop2": characterize_prop2, "vector": characterize_vector}[mode]
            got = run(spec).verdict.value
        except NormcharError as e:
            got = "error"
            detail = f" ({type(e).__name__}: {e})"
        else:
            detail = ""
        if got == expected:
            print(f"✅ {name} [{mode}]: {got}{detail}")
        else:
            print(f"❌ {name} [{mode}]: expected {expected}, got {got}{detail}")
            ok = False
    return ok


if __name__ == "__main__":
    sys.exit(0 if verify_fixtures() else 1)
