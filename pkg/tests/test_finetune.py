"""Plain fine-tuning, and its exact coincidence with empty-pool distillation."""

import numpy as np
import pytest

from pairshot.errors import NoDataError
from pairshot.finetune import FinetuneConfig, finetune, finetune_predict, run_finetune
from pairshot.pet import PetConfig, distill, train_ensemble


class TestFinetune:
    def test_untrained_steps_zero_predicts_first_label(self, dup_train, dup_test, backend):
        """Zero steps leave the zero-initialized classifier in place; all
        scores tie and the first label wins everywhere."""
        clf = finetune(FinetuneConfig(steps=0), dup_train, backend, seed=1)
        label, scores = finetune_predict(clf, dup_test[0].pair, backend.separator_token)
        assert label == dup_train.label_set.labels[0]
        np.testing.assert_array_equal(scores, np.zeros(len(scores)))

    def test_learns_separable_task(self, dup_train, dup_test, backend):
        _, report = run_finetune(
            FinetuneConfig(steps=200, batch=8), dup_train, dup_test, backend, seed=1000
        )
        assert report.metric("accuracy") > 0.85

    def test_empty_train_raises(self, dup_test, backend):
        from pairshot.data import Dataset

        empty = Dataset((), dup_test.label_set, "train")
        with pytest.raises(NoDataError):
            finetune(FinetuneConfig(steps=5), empty, backend)

    def test_two_runs_are_byte_identical(self, dup_train, dup_test, backend):
        _, first = run_finetune(
            FinetuneConfig(steps=60, batch=8), dup_train, dup_test, backend, seed=1000
        )
        _, second = run_finetune(
            FinetuneConfig(steps=60, batch=8), dup_train, dup_test, backend, seed=1000
        )
        assert first.to_json() == second.to_json()

    def test_steps_can_be_split_across_calls(self, dup_train, dup_test, backend):
        straight = finetune(FinetuneConfig(steps=80, batch=8), dup_train, backend, seed=4)
        resumed = finetune(FinetuneConfig(steps=50, batch=8), dup_train, backend, seed=4)
        resumed = finetune(
            FinetuneConfig(steps=30, batch=8), dup_train, backend, seed=4,
            classifier=resumed,
        )
        np.testing.assert_array_equal(straight.W, resumed.W)


class TestDistillationEquivalence:
    def test_empty_pool_distillation_equals_finetuning(
        self, dup_train, dup_test, backend
    ):
        """With no unlabeled data, distilling the prompt ensemble is the
        same optimization problem as fine-tuning: identical rows, steps,
        batch, learning rate, and seed give identical weights and hence
        identical predictions."""
        steps, batch, seed = 120, 8, 77

        ft = finetune(FinetuneConfig(steps=steps, batch=batch), dup_train, backend, seed=seed)

        pet_config = PetConfig.for_task(
            "so_duplicate", mlm_steps=10, distill_steps=steps, batch=batch
        )
        members = train_ensemble(pet_config, dup_train, backend, seed=seed)
        clf = backend.create_classifier(dup_train.label_set.labels, seed)
        distilled = distill(members, dup_train, None, pet_config, clf, backend, seed=seed)

        np.testing.assert_array_equal(ft.W, distilled.W)
        for ex in dup_test:
            ft_label, ft_scores = finetune_predict(ft, ex.pair, backend.separator_token)
            d_label, d_scores = finetune_predict(distilled, ex.pair, backend.separator_token)
            assert ft_label == d_label
            np.testing.assert_array_equal(ft_scores, d_scores)

    def test_nonempty_pool_breaks_the_identity(
        self, dup_train, dup_unlabeled, dup_test, backend
    ):
        """Sanity check that the equivalence above is not vacuous: adding
        unlabeled rows changes the learned weights."""
        steps, batch, seed = 60, 8, 77
        ft = finetune(FinetuneConfig(steps=steps, batch=batch), dup_train, backend, seed=seed)
        pet_config = PetConfig.for_task(
            "so_duplicate", mlm_steps=10, distill_steps=steps, batch=batch
        )
        members = train_ensemble(pet_config, dup_train, backend, seed=seed)
        clf = backend.create_classifier(dup_train.label_set.labels, seed)
        distilled = distill(
            members, dup_train, dup_unlabeled, pet_config, clf, backend, seed=seed
        )
        assert not np.array_equal(ft.W, distilled.W)
