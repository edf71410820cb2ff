import numpy as np
import pytest

from evosc.events import EventStream


def make_stream(events, sensor=(16, 16), span=None):
    """Build an EventStream from (t_us, x, y, p) tuples."""
    events = sorted(events, key=lambda e: e[0])
    if events:
        t, x, y, p = (np.array(col) for col in zip(*events))
    else:
        t = x = y = p = np.empty(0, np.int64)
    if span is None:
        span = (0, int(t[-1]) + 1 if len(t) else 0)
    return EventStream(t, x, y, p, sensor[0], sensor[1], span[0], span[1])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_events(rng, n, sensor=(16, 16), t_max=1_000_000):
    t = np.sort(rng.integers(0, t_max, n))
    x = rng.integers(0, sensor[0], n)
    y = rng.integers(0, sensor[1], n)
    p = rng.choice([-1, 1], n)
    return list(zip(t.tolist(), x.tolist(), y.tolist(), p.tolist()))
