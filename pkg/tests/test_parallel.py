import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from qpfsna.cocycle import unstable_graph
from qpfsna.maps import HermanParams
from qpfsna.parallel import chunks, pmap


@given(st.lists(st.integers(), max_size=40), st.integers(1, 8))
def test_pmap_preserves_order(xs, threads):
    assert pmap(lambda x: 2 * x, xs, threads) == [2 * x for x in xs]


@given(st.integers(0, 1000), st.integers(1, 64))
def test_chunks_partition(n, parts):
    sl = chunks(n, parts)
    assert [i for s in sl for i in range(n)[s]] == list(range(n))
    assert len(sl) <= max(parts, 1)


def test_thread_count_does_not_change_results():
    p = HermanParams(gamma=0.5)
    a = unstable_graph(p, 256, 500, threads=1)
    b = unstable_graph(p, 256, 500, threads=4)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.invariance, b.invariance)
