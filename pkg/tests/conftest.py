import numpy as np
import pytest
from PIL import Image

from tutorialkit.extraction import StubGenerationProvider
from tutorialkit.shots import FrameSample, compute_histogram
from tutorialkit.transcript import parse_transcript

TIMED_LINES = """\
[0:00] today we are building a small seesaw for kids
[0:08] you will need wood blocks and screws
[0:15] start by cutting the wood board to size
[0:55] attach the caster arm to the base with screws
[1:20] sand the board and the wood blocks
[1:45] finally paint the seesaw and let it dry
"""


@pytest.fixture
def toy_transcript():
    return parse_transcript(TIMED_LINES, "timed-lines", duration_s=120.0, video_id="seesaw")


@pytest.fixture
def stub_provider(tmp_path):
    return StubGenerationProvider(tmp_path / "canned")


def solid_frame(color, size=(16, 16)):
    """Uniform RGB image as a numpy raster."""
    arr = np.zeros((size[1], size[0], 3), dtype=np.uint8)
    arr[:, :] = color
    return arr


def make_sample(time_s, color, ref=None):
    return FrameSample(
        time_s=time_s,
        feature=compute_histogram(solid_frame(color)),
        image_ref=ref or f"{time_s:.3f}.png",
    )


def write_frame_dir(directory, times_and_colors):
    """Write solid-color frames named <seconds>.png into a directory."""
    directory.mkdir(parents=True, exist_ok=True)
    for time_s, color in times_and_colors:
        img = Image.fromarray(solid_frame(color))
        img.save(directory / f"{time_s:.3f}.png")
    return directory
