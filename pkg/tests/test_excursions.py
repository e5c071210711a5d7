from hypothesis import given, settings, strategies as st

from softcap.excursions import decompose, excursion_stats
from softcap.process import CENSORED, EXTINCT, Trace


def tr(sizes, status=None):
    if status is None:
        status = EXTINCT if sizes[-1] == 0 else CENSORED
    return Trace(tuple(sizes), status, len(sizes) - 1)


def test_decompose_examples():
    d = decompose(tr([2, 3, 2, 1, 0]), 3)
    assert d.nu == (0, 2) and d.mu == (1,) and d.z_at_nu == (2, 2) and not d.censored_tail
    d = decompose(tr([5, 4, 3, 2, 1, 0]), 3)
    assert d.nu == (3,) and d.mu == ()
    d = decompose(tr([5]), 10)
    assert d.nu == (0,) and d.mu == () and d.censored_tail


def test_stats_examples():
    s = excursion_stats(tr([2, 3, 2, 1, 0]), 3)
    assert (s.n_below_excursions, s.n_above_excursions) == (2, 1)
    assert s.above_maxima == [3] and s.above_durations == [1]
    assert s.extinct_in_excursion == 1
    s = excursion_stats(tr([3, 2, 1, 2, 1, 0]), 5)
    assert s.n_above_excursions == 0
    s = excursion_stats(tr([2, 4, 5, 2, 0]), 3)
    assert s.above_maxima == [5] and s.above_durations == [2] and s.above_starts == [4]


def test_censored_tail_excluded_from_aggregates():
    s = excursion_stats(tr([2, 3, 4, 2, 3, 5, 6]), 3)
    assert s.n_above_excursions == 2
    assert s.above_maxima == [4] and s.above_durations == [2]
    assert s.below_outcomes == [(2, False), (2, False)]
    assert s.extinct_in_excursion is None


def test_json_export():
    assert decompose(tr([2, 3, 2, 1, 0]), 3).to_json() == '{"nu":[0,2],"mu":[1],"censored":false}'


@st.composite
def walks(draw):
    z0 = draw(st.integers(0, 15))
    steps = draw(st.lists(st.sampled_from([-2, -1, 1, 2, 3]), max_size=80))
    sizes = [z0]
    for c in steps:
        if sizes[-1] == 0:
            break
        sizes.append(max(sizes[-1] + c, 0))
    return sizes


@settings(max_examples=300)
@given(walks(), st.integers(1, 12))
def test_decomposition_properties(sizes, K):
    d = decompose(tr(sizes), K)
    # segments tile the trace and reproduce the below/above pattern
    segs = d.segments()
    assert segs[0][0] == 0 and segs[-1][1] == len(sizes)
    assert all(a[1] == b[0] for a, b in zip(segs, segs[1:]))
    for a, b, below in segs:
        assert all((s < K) == below for s in sizes[a:b])
    inter = sorted(d.nu + d.mu)
    assert inter == [x for pair in zip(d.nu, d.mu) for x in pair] + list(d.nu[len(d.mu):])
    assert len(d.nu) - len(d.mu) in (0, 1)
    assert all(z <= K - 1 for z in d.z_at_nu)
    if d.nu:
        if 0 < sizes[0] < K or sizes[0] == 0:
            assert d.nu[0] == 0
        else:
            assert d.nu[0] >= 1
    if sizes[-1] == 0:
        last = [s for s in segs if s[0] <= len(sizes) - 1 < s[1]][0]
        assert last[2]
        st_ = excursion_stats(tr(sizes), K)
        assert st_.extinct_in_excursion == len(d.nu) - 1
