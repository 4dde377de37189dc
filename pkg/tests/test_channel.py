import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_subsets, origins, random_bits, ref_lp, ref_ted
from treetrace.channel import (
    EMPTY,
    ChannelConfig,
    DeletionChannel,
    censor,
    delete,
    delete_lp,
    delete_ted,
    derive_rng,
    normalize_spider_trace,
    sample_spider_vectors,
    sample_string_traces,
    sample_trace,
    spider_trace_vector,
    string_channel,
)
from treetrace.trees import Node, TreeShape, build_complete_kary, build_path, build_spider, build_star, build_tree, spider_labels, tree_labels


@pytest.mark.parametrize("shape", [TreeShape.kary(2, 2), TreeShape.kary(3, 1), TreeShape.kary(1, 4), TreeShape.spider(6, 3), TreeShape.spider(8, 2)], ids=str)
@pytest.mark.parametrize("model,ref", [("ted", ref_ted), ("lp", ref_lp)])
def test_matches_reference_all_subsets(shape, model, ref):
    x = build_tree(shape, random_bits(shape.n, 1))
    for dels in all_subsets(origins(x)):
        assert delete(x, dels, model).same_provenance(ref(x, dels)), dels


def test_ted_splice_example():
    a1, a2 = Node(1, origin=2), Node(0, origin=3)
    A, B = Node(1, [a1, a2], origin=0), Node(0, origin=1)
    out = delete_ted(Node(None, [A, B]), [0])
    assert [c.origin for c in out.children] == [2, 3, 1]


def test_lp_shift_example():
    c1, c2 = Node(0, origin=1), Node(1, origin=2)
    v = Node(1, [c1, c2], origin=0)
    out = delete_lp(Node(None, [v]), [0])
    (v_new,) = out.children
    assert v_new.label == 0 and v_new.origin == 1
    assert [(c.label, c.origin) for c in v_new.children] == [(1, 2)]


def test_lp_deletes_moved_node_by_identity():
    # deleting 0 moves node 2 up into 0's slot; node 2 is still deleted afterwards
    x = build_complete_kary(2, 2, [0, 1, 1, 0, 0, 1])
    out = delete_lp(x, [0, 2])
    assert out.same_provenance(ref_lp(x, [0, 2]))
    assert 2 not in origins(out) and 0 not in origins(out)


def test_empty_deletion_is_identity():
    x = build_complete_kary(2, 3, random_bits(14, 3))
    assert delete_ted(x, []).same_provenance(x)
    assert delete_lp(x, []).same_provenance(x)


def test_nonexistent_deletion_rejected():
    x = build_complete_kary(2, 1, [0, 1])
    with pytest.raises(ValueError):
        delete_ted(x, [5])


@pytest.mark.parametrize("n", range(1, 9))
def test_path_and_star_equal_string_channel(n):
    bits = random_bits(n, n)
    for builder in (build_path, build_star):
        x = builder(bits)
        for dels in all_subsets(range(n)):
            want = string_channel(bits, dels)
            ted, lp = delete_ted(x, dels), delete_lp(x, dels)
            got_ted = tree_labels(ted) if builder is build_path else [c.label for c in ted.children]
            assert got_ted == want
            assert ted == lp


@given(st.integers(0, 2**14 - 1), st.integers(0, 2**14 - 1), st.integers(0, 2**14 - 1))
@settings(max_examples=60)
def test_ted_deletions_compose(seed, mask_a, mask_b):
    x = build_complete_kary(2, 3, random_bits(14, seed))
    A = {i for i in range(14) if mask_a >> i & 1}
    B = {i for i in range(14) if mask_b >> i & 1} - A
    assert delete_ted(delete_ted(x, A), B).same_provenance(delete_ted(x, A | B))


@given(st.integers(0, 2**14 - 1), st.integers(1, 13))
@settings(max_examples=60)
def test_lp_deletions_compose_in_index_order(mask, cut):
    x = build_complete_kary(2, 3, random_bits(14, mask))
    dels = {i for i in range(14) if mask >> i & 1}
    A = {i for i in dels if i < cut}
    B = dels - A
    assert delete_lp(delete_lp(x, A), B).same_provenance(delete_lp(x, dels))


def test_q_zero_is_identity():
    x = build_complete_kary(3, 2, random_bits(12, 0))
    for model in ("ted", "lp"):
        y = sample_trace(x, ChannelConfig(model, 0.0), derive_rng(0, 1))
        assert y.same_provenance(x)


@pytest.mark.parametrize("model", ["ted", "lp"])
def test_expected_surviving_count(model):
    x = build_complete_kary(2, 2, [1] * 6)
    rng = derive_rng(7)
    sizes = np.array([sample_trace(x, ChannelConfig(model, 0.5), rng).size - 1 for _ in range(20000)])
    sigma = math.sqrt(6 * 0.25 / len(sizes))
    assert abs(sizes.mean() - 3.0) < 3 * sigma


def test_fixed_seed_reproducible():
    x = build_complete_kary(2, 3, random_bits(14, 4))
    cfg = ChannelConfig("lp", 0.3)
    assert sample_trace(x, cfg, derive_rng(9, 1)).same_provenance(sample_trace(x, cfg, derive_rng(9, 1)))


def test_derived_streams_differ():
    a = derive_rng(1, 0, 5).random(8)
    b = derive_rng(1, 0, 6).random(8)
    c = derive_rng(1, 0, 5).random(8)
    assert not np.allclose(a, b)
    assert np.array_equal(a, c)


def test_spider_normalization_examples():
    shape = TreeShape.spider(12, 3)
    labels = [1] * 12
    x = build_spider(12, 3, labels)
    y = delete_ted(x, [3, 4, 5])
    z = normalize_spider_trace(y, shape)
    assert len(z.children) == 4
    assert spider_labels(z) == [1] * 9 + [0, 0, 0]
    empty = delete_ted(x, range(12))
    assert spider_labels(normalize_spider_trace(empty, shape)) == [0] * 12
    assert spider_trace_vector(empty, shape).tolist() == [0.0] * 12
    assert spider_labels(normalize_spider_trace(x, shape)) == labels


def test_censor_extremes():
    x = build_complete_kary(2, 1, [0, 1])
    rng = derive_rng(0)
    assert all(censor(x, 0.0, rng) is x for _ in range(50))
    assert all(censor(x, 1.0, rng) is EMPTY for _ in range(50))
    assert not EMPTY


def _exact_spider_law(labels, shape, q):
    x = build_spider(shape.n, shape.d, labels)
    law = Counter()
    for dels in itertools.product([0, 1], repeat=shape.n):
        p = math.prod(q if b else 1 - q for b in dels)
        y = delete_ted(x, [i for i, b in enumerate(dels) if b])
        law[tuple(spider_trace_vector(y, shape))] += p
    return law


def test_vector_sampler_matches_tree_channel_law():
    shape = TreeShape.spider(6, 2)
    labels = [1, 0, 1, 1, 0, 1]
    exact = _exact_spider_law(labels, shape, 0.3)
    U = sample_spider_vectors(labels, shape, 0.3, 100_000, derive_rng(3))
    emp = Counter(map(tuple, U))
    tv = 0.5 * sum(abs(emp.get(key, 0) / len(U) - exact.get(key, 0)) for key in set(emp) | set(exact))
    assert tv < 0.02


def test_string_sampler_law():
    bits = [1, 0, 1, 1]
    q = 0.3
    exact = Counter()
    for dels in itertools.product([0, 1], repeat=4):
        p = math.prod(q if b else 1 - q for b in dels)
        exact[tuple(string_channel(bits, [i for i, b in enumerate(dels) if b]))] += p
    traces = sample_string_traces(bits, q, 100_000, derive_rng(4))
    emp = Counter(map(tuple, traces))
    tv = 0.5 * sum(abs(emp.get(key, 0) / len(traces) - exact.get(key, 0)) for key in set(emp) | set(exact))
    assert tv < 0.02


def test_deletion_channel_estimator():
    est = DeletionChannel(model="lp", q=0.2, random_state=5)
    assert est.get_params() == {"gamma": 0.0, "model": "lp", "q": 0.2, "random_state": 5}
    x = build_complete_kary(2, 2, [0, 1, 1, 0, 0, 1])
    a = est.fit().sample(x, 5)
    b = DeletionChannel(model="lp", q=0.2, random_state=5).fit().sample(x, 5)
    assert all(s.same_provenance(t) for s, t in zip(a, b))
    assert len(est.transform([x, x])) == 2


@pytest.mark.parametrize("bad", [{"q": 1.0}, {"q": -0.1}, {"model": "xyz"}, {"censor_gamma": 2.0}])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ChannelConfig(**bad)
