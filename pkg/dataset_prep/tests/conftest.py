import json

import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def toy_dataset(tmp_path):
    """20 seeded noise images plus annotations for 5 queries."""
    images = tmp_path / "images"
    images.mkdir()
    rng = np.random.default_rng(100)
    for i in range(20):
        pixels = rng.integers(0, 256, size=(24, 24, 3), dtype=np.uint8)
        Image.fromarray(pixels).save(images / f"img{i:03d}.png")

    annotations = [
        {
            "query_id": f"q{i}",
            "reference_id": f"img{i:03d}",
            "modification_text": f"make item {i} blue with stripes",
        }
        for i in range(5)
    ]
    ann_path = tmp_path / "annotations.json"
    ann_path.write_text(json.dumps(annotations))
    return images, ann_path, tmp_path / "out"
