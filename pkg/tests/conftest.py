from __future__ import annotations

import sys
from pathlib import Path

from hypothesis import strategies as st

from facebench.geometry import BoundingBox, Detection

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


def finite(lo, hi):
    return st.floats(
        min_value=lo, max_value=hi, allow_nan=False, allow_infinity=False, width=64
    )


boxes = st.builds(
    BoundingBox,
    x=finite(-100.0, 100.0),
    y=finite(-100.0, 100.0),
    w=finite(0.1, 50.0),
    h=finite(0.1, 50.0),
)

scores = finite(-10.0, 10.0)

detections = st.builds(Detection, box=boxes, score=scores)

frame_ids = st.text(
    alphabet=st.characters(min_codepoint=0x21, max_codepoint=0x7E, exclude_characters=',"'),
    min_size=1,
    max_size=12,
)
