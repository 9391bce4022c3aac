"""Analytic gradients vs central finite differences."""

from __future__ import annotations

import numpy as np
import pytest

from casesum import phrase_scorer as ps
from casesum.phrase_scorer import EmbeddingTable, EmptyInput, Hyperparams

from conftest import make_sentence, random_sentences

FD_STEP = 1e-5
TOLERANCE = 1e-4


def make_item(rng, n_body=4, n_summary=2, n_negatives=1):
    return ps.TrainingItem(
        random_sentences(rng, n_body),
        random_sentences(rng, n_summary),
        tuple(random_sentences(rng, 3) for _ in range(n_negatives)),
    )


def tiny_gradcheck_model(rng):
    vocab = [f"w{i}" for i in range(16)]
    table = EmbeddingTable(8, {t: rng.standard_normal(8) for t in vocab})
    hyper = Hyperparams(embedding_dim=8, conv_filters=4, window_size=2,
                        hidden_size=4, negatives_per_doc=1, epochs=1)
    return ps.init_model(hyper, table, rng)


def finite_difference(model, batch, array, index):
    original = array.flat[index]
    array.flat[index] = original + FD_STEP
    up = ps.batch_loss(model, batch)
    array.flat[index] = original - FD_STEP
    down = ps.batch_loss(model, batch)
    array.flat[index] = original
    return (up - down) / (2 * FD_STEP)


def check_all_coordinates(model, batch):
    grads = ps.gradients(model, batch)
    worst = 0.0
    pairs = list(zip(
        (model.conv_kernel, model.hidden_weights, model.hidden_bias,
         model.out_weights),
        grads.arrays()))
    checked = 0
    for param, analytic in pairs:
        for index in range(param.size):
            fd = finite_difference(model, batch, param, index)
            denom = max(abs(fd), abs(analytic.flat[index]), 1e-8)
            worst = max(worst, abs(fd - analytic.flat[index]) / denom)
            checked += 1
    # scalar bias via a 0-d view trick
    bias = np.array([model.out_bias])

    def with_bias(value):
        model.out_bias = float(value)
        return ps.batch_loss(model, batch)

    fd = (with_bias(bias[0] + FD_STEP) - with_bias(bias[0] - FD_STEP)) / (2 * FD_STEP)
    model.out_bias = float(bias[0])
    denom = max(abs(fd), abs(grads.out_bias), 1e-8)
    worst = max(worst, abs(fd - grads.out_bias) / denom)
    return worst, checked + 1


class TestGradientCheck:
    def test_every_coordinate_on_tiny_model(self):
        rng = np.random.default_rng(42)
        model = tiny_gradcheck_model(rng)
        batch = [make_item(rng)]
        assert ps.gradients(model, batch).loss > 0.0  # hinge active
        worst, checked = check_all_coordinates(model, batch)
        assert checked >= 100
        assert worst < TOLERANCE

    def test_with_two_negatives_and_two_items(self):
        rng = np.random.default_rng(7)
        model = tiny_gradcheck_model(rng)
        batch = [make_item(rng, n_negatives=2), make_item(rng, n_negatives=2)]
        worst, _ = check_all_coordinates(model, batch)
        assert worst < TOLERANCE


class TestFlatRegion:
    def test_satisfied_margin_gives_zero_gradients(self):
        # crafted model: summary tokens activate the filter, body tokens do
        # not, so the combination clears the margin and the hinge is flat
        table = EmbeddingTable(2, {"good": np.array([5.0, 0.0]),
                                   "dull": np.array([-5.0, 0.0])})
        hyper = Hyperparams(embedding_dim=2, conv_filters=1, window_size=1,
                            hidden_size=1, negatives_per_doc=0, epochs=1)
        model = ps.init_model(hyper, table)
        model.conv_kernel[:] = np.array([[1.0, 0.0]])
        model.hidden_weights[:] = np.array([[1.0, 0.0, 0.0]])
        model.hidden_bias[:] = 0.0
        model.out_weights[:] = np.array([10.0])
        model.out_bias = 0.0
        item = ps.TrainingItem(
            (make_sentence("dull", "dull"),),
            (make_sentence("good", "good"),))
        grads = ps.gradients(model, [item])
        assert grads.loss == 0.0
        assert all(not a.any() for a in grads.arrays())
        assert grads.out_bias == 0.0


class TestLinearity:
    def test_duplicated_item_doubles_gradients(self):
        rng = np.random.default_rng(3)
        model = tiny_gradcheck_model(rng)
        item = make_item(rng)
        single = ps.gradients(model, [item])
        double = ps.gradients(model, [item, item])
        assert double.loss == pytest.approx(2 * single.loss, rel=1e-12)
        for a, b in zip(single.arrays(), double.arrays()):
            assert np.allclose(2 * a, b, atol=1e-14)

    def test_empty_batch_rejected(self):
        rng = np.random.default_rng(3)
        with pytest.raises(EmptyInput):
            ps.gradients(tiny_gradcheck_model(rng), [])


class TestClipping:
    def test_global_norm_scaling(self):
        rng = np.random.default_rng(5)
        model = tiny_gradcheck_model(rng)
        grads = ps.gradients(model, [make_item(rng)])
        norm = grads.global_norm()
        assert norm > 0
        grads.scale(0.5)
        assert grads.global_norm() == pytest.approx(0.5 * norm)
