import numpy as np
import pytest

import formulafind as ff

SUM = r"\sum_{i=a}^b f(i)"


def test_encode_golden_sequence():
    e = ff.encode(SUM)
    assert e.codes == [102, 1000, 1004, 201, 1004, 1001, 1002, 1004, 1003, 1004, 156, 1004, 157]
    assert e.depth == 1
    assert e.label == "Medium"
    assert ff.nested_depth(ff.encode("a^{2^n}_m").codes) == 2


def test_encode_error_is_value_error():
    with pytest.raises(ValueError):
        ff.encode(r"a + \nope")


def test_vocabulary_lookup():
    v = ff.default_vocabulary()
    assert v.code_of(r"\sum") == 102
    assert v.keyword_of(201) == "="
    assert v.code_of(r"\nope") is None


def test_lcs_and_distance():
    assert ff.lcs_length([1, 3, 5, 7], [3, 1, 7, 5, 9]) == 2
    assert ff.euclidean_distance([0, 0], [3, 4]) == pytest.approx(5.0)


def test_train_extract_query_round_trip(tmp_path):
    corpus = ff.generate_synthetic(60, 2)
    assert len(corpus) == 60
    assert sorted(corpus.class_counts) == [20, 20, 20]
    model, report = ff.train(corpus, ff.ModelConfig(embed_dim=6, rnn_units=8, max_epochs=2))
    assert report["fit_size"] + report["validation_size"] + report["test_size"] == 60
    assert len(report["epochs"]) == 2

    db = ff.build_feature_db(corpus, model)
    assert len(db) == 60 and db.dim == 8
    member = corpus.records[5]
    np.testing.assert_array_equal(db.vector(5), model.features(member.codes))

    hits = ff.query_semantic(member.latex, db, model, k=3)
    assert len(hits) == 3
    assert hits[0][0] == member.id and hits[0][1] <= 1e-6
    lcs = ff.query_lcs(member.latex, corpus, k=3, exclude_self=True)
    assert member.id not in [h[0] for h in lcs]

    model.save(str(tmp_path / "m.merm"))
    db.save(str(tmp_path / "f.merf"))
    again = ff.load_checkpoint(str(tmp_path / "m.merm"))
    assert again.checkpoint_bytes() == model.checkpoint_bytes()
    assert ff.load_feature_db(str(tmp_path / "f.merf")) == db

    heat = model.heatmap(SUM)
    assert heat.shape == (13, 8)
