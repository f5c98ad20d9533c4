# tests/conftest.py
from pathlib import Path

import pytest

from hybrid.lang import parse, validate

REPO = Path(__file__).resolve().parents[1]
MODELS = REPO / "corpus" / "models"
DATA = REPO / "corpus" / "data"

OUTLIER = """\
const N = 5;
function outlier(yobs) {
  x <- gaussian(0., 100.);
  for i in 1 .. N {
    x <- gaussian(x, 1.);
    o <- approx bernoulli(.1);
    if (o) { y <- gaussian(0., 100.); }
    else { y <- gaussian(x, 1.); }
    observe(y, yobs[i]);
  }
  x
}
"""


def check(source: str):
    return validate(parse(source))


def model(name: str):
    return validate(parse((MODELS / f"{name}.hppl").read_text(encoding="utf-8")))


@pytest.fixture
def outlier():
    return check(OUTLIER)
