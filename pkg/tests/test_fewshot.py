import numpy as np
import pytest

from acamsim.core import NoiseSpec
from acamsim.errors import ParseError
from acamsim.fewshot import (
    EmbeddingTable,
    Episode,
    FewshotConfig,
    build_support_array,
    classify,
    classify_cosine,
    cosine_accuracy,
    dump_accuracy_csv,
    load_embeddings,
    parse_embeddings,
    sample_episode,
    save_embeddings,
    support_rows,
    sweep_accuracy,
    synth_embeddings,
    to_voltages,
)

HEADER = "label," + ",".join(f"e{j}" for j in range(64)) + "\n"


def row(label, values):
    return f"{label}," + ",".join(repr(float(v)) for v in values) + "\n"


def test_load_header_only(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text(HEADER)
    table = load_embeddings(path)
    assert len(table) == 0 and table.d == 64


def test_load_one_row():
    table = parse_embeddings(HEADER + row(3, range(64)))
    assert len(table) == 1 and table.labels.tolist() == [3]
    assert table.features[0, 63] == 63.0


def test_load_short_row_reports_line():
    text = HEADER + row("a", range(64)) + row("b", range(63))
    with pytest.raises(ParseError) as info:
        parse_embeddings(text, path="emb.csv")
    assert info.value.line == 3


def test_load_bad_header_and_missing_file(tmp_path):
    with pytest.raises(ParseError):
        parse_embeddings("name,e0\n1,2\n")
    with pytest.raises(ParseError):
        load_embeddings(tmp_path / "missing.csv")


def test_string_labels_kept():
    table = parse_embeddings("label,e0\ncat,0.1\ndog,0.2\n")
    assert table.labels.tolist() == ["cat", "dog"]


def test_save_load_round_trip(tmp_path):
    table = synth_embeddings(3, 4, d=8, seed=1)
    save_embeddings(table, tmp_path / "t.csv")
    back = load_embeddings(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.features, table.features)
    np.testing.assert_array_equal(back.labels, table.labels)


def test_synth_properties():
    a = synth_embeddings(4, 5, seed=3)
    b = synth_embeddings(4, 5, seed=3)
    np.testing.assert_array_equal(a.features, b.features)
    assert a.features.shape == (20, 64)
    flat = synth_embeddings(3, 4, cluster_std=0.0, seed=2)
    for c in range(3):
        block = flat.features[flat.labels == c]
        assert np.all(block == block[0])
    with pytest.raises(ValueError):
        synth_embeddings(0, 3)
    with pytest.raises(ValueError):
        synth_embeddings(2, 3, cluster_std=-1.0)


def test_synth_within_class_std():
    table = synth_embeddings(1, 10_000, d=4, cluster_std=0.3, seed=4)
    assert np.std(table.features, axis=0) == pytest.approx([0.3] * 4, rel=0.1)


def test_to_voltages_affine():
    table = EmbeddingTable([0, 1], [[-5.0, 0.0], [5.0, 10.0]])
    v = to_voltages(table)
    assert v.features.min() == -0.3 and v.features.max() == 2.0
    assert v.features[0, 1] == pytest.approx(-0.3 + 5 / 15 * 2.3)


def episode_fixture(values=None):
    support = np.array(values if values is not None else [[0.5, 1.0], [1.5, 0.2]])
    return Episode(2, 1, support, np.array([7, 9]), support[1].copy(), 9)


def test_episode_invariants():
    with pytest.raises(ValueError):
        Episode(2, 2, np.zeros((3, 4)), np.array([0, 0, 1]), np.zeros(4), 0)
    with pytest.raises(ValueError):
        Episode(2, 1, np.zeros((2, 4)), np.array([0, 0]), np.zeros(4), 0)
    with pytest.raises(ValueError):
        Episode(2, 1, np.zeros((2, 4)), np.array([0, 1]), np.zeros(3), 0)


def test_build_support_array_windows():
    ep = episode_fixture()
    arr = build_support_array(ep, FewshotConfig(window_size=0.4, quant_bits=None))
    assert arr.shape == (2, 2)
    assert arr.lower[0, 0] == pytest.approx(0.3) and arr.upper[0, 0] == pytest.approx(0.7)
    top = build_support_array(episode_fixture([[2.0, 1.0], [1.5, 0.2]]),
                              FewshotConfig(window_size=0.4, quant_bits=None))
    assert top.upper[0, 0] == 2.0


def test_build_support_array_shape_5way_5shot():
    table = to_voltages(synth_embeddings(10, 6, seed=0))
    ep = sample_episode(table, 5, 5, np.random.default_rng(0))
    assert build_support_array(ep, FewshotConfig()).shape == (25, 64)
    assert build_support_array(ep, FewshotConfig(centroid=True)).shape == (5, 64)


def test_build_support_array_noise():
    ep = episode_fixture()
    cfg = FewshotConfig(quant_bits=None, noise=NoiseSpec(0.05, seed=3))
    a, b = build_support_array(ep, cfg), build_support_array(ep, cfg)
    assert a.same_windows(b)
    assert not a.same_windows(build_support_array(ep, FewshotConfig(quant_bits=None)))


def test_classify_self_match():
    ep = episode_fixture()
    assert classify(ep, FewshotConfig(window_size=0.4, quant_bits=4)) == 9


def test_classify_zero_window_ties_to_row_zero():
    rng = np.random.default_rng(1)
    support = rng.uniform(0.0, 1.0, (3, 8))
    ep = Episode(3, 1, support, np.array([4, 5, 6]), rng.uniform(0.0, 1.0, 8), 6)
    assert classify(ep, FewshotConfig(window_size=0.0, quant_bits=None)) == 4


def test_classify_permutation_invariant():
    table = to_voltages(synth_embeddings(8, 6, cluster_std=0.4, seed=5))
    cfg = FewshotConfig()
    for s in range(20):
        ep = sample_episode(table, 5, 5, np.random.default_rng(s))
        perm = np.random.default_rng(100 + s).permutation(25)
        shuffled = Episode(5, 5, ep.support[perm], ep.support_labels[perm], ep.query, ep.query_label)
        from acamsim.search import analog_hamming
        a = analog_hamming(build_support_array(ep, cfg), ep.query).scores
        b = analog_hamming(build_support_array(shuffled, cfg), ep.query).scores
        np.testing.assert_array_equal(a[perm], b)
        if np.count_nonzero(a == a.max()) == 1:
            assert classify(ep, cfg) == classify(shuffled, cfg)


def test_centroid_rows():
    support = np.array([[0.0, 0.0], [1.0, 2.0], [5.0, 5.0], [7.0, 5.0]])
    ep = Episode(2, 2, support, np.array([1, 1, 2, 2]), [6.0, 5.0], 2)
    rows, labels = support_rows(ep, FewshotConfig(centroid=True))
    np.testing.assert_array_equal(rows, [[0.5, 1.0], [6.0, 5.0]])
    assert labels.tolist() == [1, 2]
    assert classify_cosine(ep, centroid=True) == 2


def test_episode_sampling_no_overlap():
    table = synth_embeddings(6, 7, d=4, seed=2)
    # tag each row by its index in the first feature
    table = EmbeddingTable(table.labels, np.column_stack([np.arange(42), table.features]))
    for s in range(200):
        ep = sample_episode(table, 5, 5, np.random.default_rng(s))
        assert ep.query[0] not in ep.support[:, 0]
        assert ep.query_label in ep.support_labels
        assert len(set(ep.support[:, 0].tolist())) == 25


def test_insufficient_classes():
    table = synth_embeddings(4, 6, seed=0)
    with pytest.raises(ValueError):
        sample_episode(table, 5, 5, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sweep_accuracy(synth_embeddings(6, 5, seed=0), 5, 5, 10, [0.4], [0.0], seed=0)


def test_separable_accuracy_one():
    table = synth_embeddings(10, 6, cluster_std=0.01, seed=8)
    cells = sweep_accuracy(table, 5, 1, 100, [0.4], [0.0], seed=3)
    assert cells[0].accuracy == 1.0 and cells[0].n_episodes == 100


def test_sweep_deterministic_and_consistent():
    table = synth_embeddings(10, 6, cluster_std=0.5, seed=9)
    grid = sweep_accuracy(table, 5, 5, 60, [0.2, 0.4], [0.0, 0.1], seed=4)
    again = sweep_accuracy(table, 5, 5, 60, [0.2, 0.4], [0.0, 0.1], seed=4, threads=4)
    assert grid == again
    clean = sweep_accuracy(table, 5, 5, 60, [0.2, 0.4], [0.0], seed=4)
    assert [c.accuracy for c in grid if c.noise_std == 0.0] == [c.accuracy for c in clean]


def test_noise_degrades_in_expectation():
    # 500 episodes; one-sided paired test at 95 %
    table = synth_embeddings(20, 10, cluster_std=0.6, seed=11)
    clean = sweep_accuracy(table, 5, 5, 500, [0.3], [0.0], seed=12, quant_bits=None)[0]
    noisy = sweep_accuracy(table, 5, 5, 500, [0.3], [0.2], seed=12, quant_bits=4)[0]
    se = np.sqrt((clean.accuracy * (1 - clean.accuracy) + noisy.accuracy * (1 - noisy.accuracy)) / 500)
    assert clean.accuracy >= noisy.accuracy - 1.645 * se


def test_cosine_baseline():
    table = synth_embeddings(10, 6, cluster_std=0.05, seed=8)
    assert cosine_accuracy(table, 5, 5, 50, seed=1) == 1.0


def test_accuracy_csv():
    table = synth_embeddings(6, 3, cluster_std=0.05, seed=8)
    text = dump_accuracy_csv(sweep_accuracy(table, 5, 1, 5, [0.4], [0.0, 0.1], seed=0))
    lines = text.splitlines()
    assert lines[0] == "window_size,noise_std,accuracy,n_episodes"
    assert len(lines) == 3 and lines[1].endswith(",5")
