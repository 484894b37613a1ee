import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from channel_boxes.qobjects import ChannelBox, QState, channel_from_kraus  # noqa: E402

FIXTURES = ROOT / "fixtures"


def random_state(rng: np.random.Generator, dim: int = 2, rank: int | None = None) -> QState:
    rank = rank or dim
    columns = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    density = columns @ columns.conj().T
    return QState.from_matrix(density / np.trace(density).real, (dim,))


def random_channel(rng: np.random.Generator, d_in: int = 2, d_out: int = 2, kraus_count: int = 2):
    stacked = rng.standard_normal((kraus_count * d_out, d_in)) + 1j * rng.standard_normal((kraus_count * d_out, d_in))
    isometry, _ = np.linalg.qr(stacked)
    return channel_from_kraus([isometry[k * d_out:(k + 1) * d_out] for k in range(kraus_count)], d_in, d_out)


def random_box(rng: np.random.Generator, d_in: int = 2, d_out: int = 2) -> ChannelBox:
    """Box whose second channel has full-rank Choi operator, so every D_max is finite."""

    return ChannelBox(random_channel(rng, d_in, d_out), random_channel(rng, d_in, d_out, kraus_count=d_in * d_out))


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture
def fixtures_dir():
    return FIXTURES
