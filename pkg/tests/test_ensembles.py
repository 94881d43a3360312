"""
Ensembles: member sampling, aggregation and ensemble files.
"""
from dataclasses import replace

import numpy as np
import pytest

from decision_stream.data import SynthConfig, generate, split_train_valid
from decision_stream.evaluation import accuracy_error
from decision_stream.exceptions import ConfigError, SchemaMismatchError
from decision_stream.stream import DsModel, TaskKind, predict_batch, save_model, serialize
from decision_stream.training import (
    Ensemble,
    EnsembleConfig,
    TrainConfig,
    load_predictor,
    predict_dataset,
    predict_ensemble,
    save_ensemble,
    serialize_ensemble,
    train,
    train_ensemble,
)
from decision_stream.training.ensembles import aggregate, draw_member, feature_count, train_member

from conftest import build_dataset, random_dataset

BASE = TrainConfig(p_lim=0.2)


def empty_ensemble(task, num_classes=None):
    return Ensemble(members=[], task=task, num_classes=num_classes, schema_fingerprint="f")


@pytest.fixture
def dataset():
    return random_dataset(np.random.default_rng(5), 90, 6, classification=True, num_classes=3)


def test_single_full_member_equals_plain_training(dataset):
    config = EnsembleConfig(n_members=1, bootstrap=False, feature_fraction=1.0, base=BASE)
    ensemble = train_ensemble(dataset, config)
    model, _ = train(dataset, BASE)

    assert ensemble.members[0].features == tuple(range(6))
    assert serialize(ensemble.members[0].model) == serialize(model)
    assert predict_ensemble(ensemble, dataset).tolist() == predict_batch(model, dataset).tolist()


def test_majority_vote_and_ties():
    ensemble = empty_ensemble(TaskKind.CLASSIFICATION, 3)
    assert aggregate(ensemble, np.array([[0], [1], [1]])).tolist() == [1]
    # ties resolve to the lowest class code
    assert aggregate(ensemble, np.array([[2, 1], [2, 0], [1, 0], [1, 1]])).tolist() == [1, 0]


def test_mean_for_regression():
    ensemble = empty_ensemble(TaskKind.REGRESSION)
    assert aggregate(ensemble, np.array([[1.0, 0.0], [2.0, 4.0], [3.0, 2.0]])).tolist() == [2.0, 2.0]


def test_empty_ensemble_cannot_predict(dataset):
    with pytest.raises(ConfigError):
        predict_ensemble(empty_ensemble(TaskKind.CLASSIFICATION, 3), dataset)


@pytest.mark.parametrize("fraction, n_features, expected", [(0.5, 3, 2), (1.0, 7, 7), (1 / 3, 10, 3)])
def test_feature_count_rounds_half_up(fraction, n_features, expected):
    assert feature_count(fraction, n_features) == expected


def test_fraction_selecting_nothing_is_rejected():
    with pytest.raises(ConfigError):
        feature_count(0.1, 4)
    with pytest.raises(ConfigError):
        EnsembleConfig(n_members=0)
    with pytest.raises(ConfigError):
        EnsembleConfig(feature_fraction=1.5)


def test_presets_resolve_fractions():
    forest = EnsembleConfig.preset("forest")
    assert forest.bootstrap
    assert forest.resolve_fraction(9, classification=True) == pytest.approx(1 / 3)
    assert forest.resolve_fraction(9, classification=False) == pytest.approx(1 / 3)
    assert EnsembleConfig.preset("subspace").resolve_fraction(16, classification=True) == pytest.approx(0.25)
    assert not EnsembleConfig.preset("subspace").bootstrap
    assert EnsembleConfig.preset("bagging").resolve_fraction(16, classification=True) == 1.0


def test_member_draws_depend_only_on_seed_and_index():
    rows_a, features_a = draw_member(50, 10, 4, True, seed=3, index=2)
    rows_b, features_b = draw_member(50, 10, 4, True, seed=3, index=2)
    assert np.array_equal(rows_a, rows_b) and features_a == features_b
    assert list(features_a) == sorted(features_a) and len(set(features_a)) == 4
    rows_c, _ = draw_member(50, 10, 4, True, seed=3, index=3)
    assert not np.array_equal(rows_a, rows_c)


def test_members_train_independently(dataset):
    config = EnsembleConfig.preset("forest", n_members=4, base=BASE, seed=11)
    ensemble = train_ensemble(dataset, config)
    k = len(ensemble.members[0].features)
    alone = train_member(dataset, config, k, 2)
    assert alone.features == ensemble.members[2].features
    assert serialize(alone.model) == serialize(ensemble.members[2].model)


def test_ensemble_is_deterministic_across_threads(dataset):
    config = EnsembleConfig.preset("bagging", n_members=3, base=BASE, seed=1)
    threaded = EnsembleConfig.preset("bagging", n_members=3, base=BASE, seed=1, threads=3)
    assert serialize_ensemble(train_ensemble(dataset, config)) == serialize_ensemble(train_ensemble(dataset, threaded))


def test_ensemble_file_round_trip(tmp_path, dataset):
    ensemble = train_ensemble(dataset, EnsembleConfig.preset("subspace", n_members=3, base=BASE))
    save_ensemble(ensemble, tmp_path / "e.json")
    loaded = load_predictor(tmp_path / "e.json")

    assert isinstance(loaded, Ensemble)
    assert loaded.config["n_members"] == 3
    assert predict_dataset(loaded, dataset).tolist() == predict_ensemble(ensemble, dataset).tolist()
    row = dataset.row(0)
    assert predict_ensemble(loaded, row) == predict_ensemble(ensemble, dataset)[0]


def test_load_predictor_reads_single_models(tmp_path, toy):
    model, _ = train(toy, TrainConfig(p_lim=0.5))
    save_model(model, tmp_path / "m.json")
    loaded = load_predictor(tmp_path / "m.json")
    assert isinstance(loaded, DsModel)
    assert predict_dataset(loaded, toy).tolist() == [0, 0, 1, 1]


def test_regression_ensemble_averages(rng):
    x = rng.uniform(0.0, 1.0, 120)
    dataset = build_dataset([("x", "continuous", x), ("z", "continuous", rng.normal(size=120))], 3.0 * x)
    ensemble = train_ensemble(dataset, EnsembleConfig(n_members=3, base=BASE))
    stacked = np.vstack([predict_batch(m.model, dataset.select_features(m.features)) for m in ensemble.members])
    np.testing.assert_allclose(predict_ensemble(ensemble, dataset), stacked.mean(axis=0))


def test_schema_mismatch(dataset, toy):
    ensemble = train_ensemble(dataset, EnsembleConfig(n_members=1, base=BASE))
    with pytest.raises(SchemaMismatchError):
        predict_ensemble(ensemble, toy)


@pytest.mark.slow
def test_larger_subspace_ensembles_do_not_lose_accuracy():
    dataset = generate(SynthConfig(n_samples=1500, seed=11, n_binary=5, n_categorical=5, n_continuous=10))
    fit, valid = split_train_valid(dataset, 1 / 3, seed=11)
    errors = {1: [], 10: [], 50: []}
    for seed in range(10):
        ensemble = train_ensemble(fit, EnsembleConfig.preset("subspace", n_members=50, seed=seed))
        # members are seeded by (seed, index), so prefixes are the smaller ensembles
        for size in errors:
            prefix = replace(ensemble, members=ensemble.members[:size])
            errors[size].append(accuracy_error(predict_ensemble(prefix, valid), valid.labels))
    medians = {size: float(np.median(values)) for size, values in errors.items()}
    assert medians[10] <= medians[1] + 0.5
    assert medians[50] <= medians[10] + 0.5
