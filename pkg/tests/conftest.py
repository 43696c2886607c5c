import json
import math
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
LN2 = math.log(2)


@pytest.fixture(scope="session")
def figures():
    raw = json.loads((DATA / "figures.json").read_text())
    return {fig: {s: {int(n): float(v) for n, v in series.items()} for s, series in d.items()} for fig, d in raw.items()}
