import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from bowenrich.bow import SparseVector, vectorize
from bowenrich.classify import (
    MNBModel,
    Prediction,
    SVMModel,
    load_model,
    predict_mnb,
    predict_svm,
    save_model,
    top_k,
    train_binary_svm,
    train_mnb,
    train_svm_ovo,
)
from bowenrich.corpus import build_vocabulary

from conftest import make_doc


def mnb_exact_posteriors(rows, vector):
    """Exact-rational Bayes oracle: posterior mass per class, no logs, no floats."""
    classes = sorted({label for _, label in rows})
    dim = rows[0][0].dimension
    posteriors = {}
    for c in classes:
        class_rows = [vec for vec, label in rows if label == c]
        prior = Fraction(len(class_rows), len(rows))
        counts = {}
        total = 0
        for vec in class_rows:
            for idx, count in vec.items():
                counts[idx] = counts.get(idx, 0) + count
                total += count
        posterior = prior
        for idx, count in vector.items():
            cond = Fraction(counts.get(idx, 0) + 1, total + dim)
            posterior *= cond**count
        posteriors[c] = posterior
    return posteriors


def exact_argmax_set(posteriors):
    best = max(posteriors.values())
    return {c for c, p in posteriors.items() if p == best}


@pytest.fixture
def oracle_corpus():
    """Class A: {x x}, {x y}; class B: {y y}; vocabulary {x, y}."""
    docs = [
        make_doc("1", ["x", "x"], ("A",)),
        make_doc("2", ["x", "y"], ("A",)),
        make_doc("3", ["y", "y"], ("B",)),
    ]
    vocab = build_vocabulary(docs)
    rows = [(vectorize(d.tokens, vocab), d.primary_label) for d in docs]
    return vocab, rows


class TestPrediction:
    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            Prediction((("a", 1.0), ("a", 0.5)))

    def test_increasing_scores_rejected(self):
        with pytest.raises(ValueError):
            Prediction((("a", 0.5), ("b", 1.0)))

    def test_top_label(self):
        assert Prediction((("a", 1.0), ("b", 0.5))).label == "a"


class TestTopK:
    PRED = Prediction((("A", 0.5), ("B", 0.3), ("C", 0.2)))

    def test_full_ranking(self):
        assert top_k(self.PRED, 3) == ["A", "B", "C"]

    def test_singleton(self):
        assert top_k(self.PRED, 1) == ["A"]

    def test_k_beyond_class_count(self):
        assert top_k(self.PRED, 10) == ["A", "B", "C"]

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            top_k(self.PRED, 0)


class TestTrainMNB:
    def test_hand_computed_laplace_values(self, oracle_corpus):
        vocab, rows = oracle_corpus
        model = train_mnb(rows)
        a, b = model.classes.index("A"), model.classes.index("B")
        x, y = vocab.index_of("x"), vocab.index_of("y")
        assert math.exp(model.log_prior[a]) == pytest.approx(2 / 3, rel=1e-12)
        assert math.exp(model.log_cond[a, x]) == pytest.approx(2 / 3, rel=1e-12)  # (3+1)/(4+2)
        assert math.exp(model.log_cond[b, x]) == pytest.approx(1 / 4, rel=1e-12)  # (0+1)/(2+2)

    def test_priors_normalize(self, oracle_corpus):
        _, rows = oracle_corpus
        model = train_mnb(rows)
        assert np.exp(model.log_prior).sum() == pytest.approx(1.0, rel=1e-12)

    def test_conditionals_normalize_per_class(self, oracle_corpus):
        _, rows = oracle_corpus
        model = train_mnb(rows)
        for row in np.exp(model.log_cond):
            assert row.sum() == pytest.approx(1.0, rel=1e-12)

    def test_single_class_corpus(self):
        rows = [(SparseVector({0: 1}, 2), "only"), (SparseVector({1: 2}, 2), "only")]
        model = train_mnb(rows)
        assert model.classes == ("only",)
        assert predict_mnb(model, SparseVector({0: 1}, 2)).label == "only"

    def test_empty_training_rejected(self):
        with pytest.raises(ValueError):
            train_mnb([])

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(ValueError):
            train_mnb([(SparseVector({}, 2), "a"), (SparseVector({}, 3), "b")])


class TestPredictMNB:
    def test_oracle_example(self, oracle_corpus):
        vocab, rows = oracle_corpus
        model = train_mnb(rows)
        pred = predict_mnb(model, SparseVector({vocab.index_of("x"): 1}, len(vocab)))
        assert pred.label == "A"  # 2/3*2/3 = 4/9 beats 1/3*1/4 = 1/12

    def test_empty_vector_falls_back_to_priors(self):
        rows = [
            (SparseVector({0: 1}, 2), "big"),
            (SparseVector({0: 1}, 2), "big"),
            (SparseVector({1: 1}, 2), "small"),
        ]
        model = train_mnb(rows)
        assert predict_mnb(model, SparseVector({}, 2)).label == "big"

    def test_equal_priors_tie_breaks_alphabetically(self):
        rows = [(SparseVector({0: 1}, 2), "zed"), (SparseVector({0: 1}, 2), "abc")]
        model = train_mnb(rows)
        pred = predict_mnb(model, SparseVector({}, 2))
        assert pred.label == "abc"

    def test_uniform_prior_scaling_preserves_argmax(self):
        rng = np.random.default_rng(17)
        dim = 4
        rows = []
        for c in ("a", "b"):
            for _ in range(3):  # equal class sizes -> uniform priors
                nnz = rng.integers(1, dim + 1)
                idx = rng.choice(dim, size=nnz, replace=False)
                rows.append((SparseVector({int(i): int(rng.integers(1, 4)) for i in idx}, dim), c))
        model = train_mnb(rows)
        for _ in range(50):
            idx = rng.choice(dim, size=2, replace=False)
            v = SparseVector({int(i): int(rng.integers(1, 4)) for i in idx}, dim)
            scaled = SparseVector({i: 5 * c for i, c in v.items()}, dim)
            assert predict_mnb(model, v).label == predict_mnb(model, scaled).label

    def test_matches_exact_rational_oracle(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            dim = int(rng.integers(2, 6))
            n_docs = int(rng.integers(2, 6))
            rows = []
            for d in range(n_docs):
                nnz = int(rng.integers(1, dim + 1))
                idx = rng.choice(dim, size=nnz, replace=False)
                label = ["P", "Q"][int(rng.integers(0, 2))] if d > 1 else ["P", "Q"][d]
                rows.append((SparseVector({int(i): int(rng.integers(1, 4)) for i in idx}, dim), label))
            model = train_mnb(rows)
            for bits in product((0, 1), repeat=dim):
                v = SparseVector({i: b for i, b in enumerate(bits)}, dim)
                assert predict_mnb(model, v).label in exact_argmax_set(mnb_exact_posteriors(rows, v))

    def test_long_document_scores_stay_finite(self, oracle_corpus):
        vocab, rows = oracle_corpus
        model = train_mnb(rows)
        v = SparseVector({vocab.index_of("x"): 5000, vocab.index_of("y"): 5000}, len(vocab))
        pred = predict_mnb(model, v)
        assert all(np.isfinite(score) for _, score in pred.ranking)

    def test_dimension_mismatch_rejected(self, oracle_corpus):
        _, rows = oracle_corpus
        model = train_mnb(rows)
        with pytest.raises(ValueError):
            predict_mnb(model, SparseVector({}, 99))


def separable_rows(dim=4, per_class=15):
    """Class A lives on token 0, class B on token 1; trivially separable."""
    rows, labels = [], []
    for i in range(per_class):
        rows.append(SparseVector({0: 1 + i % 3, 2: 1}, dim))
        labels.append("A")
        rows.append(SparseVector({1: 1 + i % 2, 3: 1}, dim))
        labels.append("B")
    return rows, labels


def max_kkt_violation(rows, y, w, bias, alpha, C):
    """Largest projected-gradient violation of the dual box problem."""
    worst = 0.0
    for vec, yi, ai in zip(rows, y, alpha):
        margin = bias + sum(w[i] * c for i, c in vec.items())
        g = yi * margin - 1.0
        if ai <= 0.0:
            pg = min(g, 0.0)
        elif ai >= C:
            pg = max(g, 0.0)
        else:
            pg = g
        worst = max(worst, abs(pg))
    return worst


class TestTrainSVM:
    def test_pair_count_matches_class_count(self):
        rng = np.random.default_rng(3)
        for m in (2, 3):
            rows, labels = [], []
            for ci in range(m):
                for _ in range(4):
                    rows.append(SparseVector({ci: int(rng.integers(1, 4))}, m), )
                    labels.append(f"c{ci}")
            model = train_svm_ovo(zip(rows, labels))
            assert model.n_pairs == m * (m - 1) // 2

    def test_separable_pair_reaches_full_training_recall(self):
        rows, labels = separable_rows()
        model = train_svm_ovo(zip(rows, labels), C=1.0)
        assert all(predict_svm(model, v).label == lab for v, lab in zip(rows, labels))

    def test_kkt_conditions_within_tolerance(self):
        rows, labels = separable_rows()
        y = [1 if lab == "A" else -1 for lab in labels]
        w, bias, alpha = train_binary_svm(rows, y, C=1.0, tol=1e-3)
        assert max_kkt_violation(rows, y, w, bias, alpha, C=1.0) <= 1e-3 + 1e-9

    def test_kkt_holds_on_noisy_overlapping_data(self):
        rng = np.random.default_rng(40)
        dim = 6
        rows, y = [], []
        for _ in range(60):
            nnz = int(rng.integers(1, 5))
            idx = rng.choice(dim, size=nnz, replace=False)
            rows.append(SparseVector({int(i): int(rng.integers(1, 4)) for i in idx}, dim))
            y.append(int(rng.integers(0, 2)) * 2 - 1)
        w, bias, alpha = train_binary_svm(rows, y, C=1.0, tol=1e-3)
        assert max_kkt_violation(rows, y, w, bias, alpha, C=1.0) <= 1e-3 + 1e-9
        assert np.all(alpha >= 0.0) and np.all(alpha <= 1.0)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            train_svm_ovo([(SparseVector({0: 1}, 2), "only")])

    def test_default_regularization_is_one(self):
        rows, labels = separable_rows()
        model = train_svm_ovo(zip(rows, labels))
        assert model.C == 1.0


def hand_built_svm(biases, classes=("a", "b", "c"), dim=2):
    m = len(classes)
    n_pairs = m * (m - 1) // 2
    pair_left = np.empty(n_pairs, dtype=np.int64)
    pair_right = np.empty(n_pairs, dtype=np.int64)
    pid = 0
    for left in range(m):
        for right in range(left + 1, m):
            pair_left[pid], pair_right[pid] = left, right
            pid += 1
    return SVMModel(
        classes=classes,
        pair_left=pair_left,
        pair_right=pair_right,
        weights=np.zeros((n_pairs, dim)),
        bias=np.asarray(biases, dtype=np.float64),
        C=1.0,
        dimension=dim,
    )


class TestPredictSVM:
    def test_majority_vote(self):
        # decisions: (a,b)=+1 -> a, (a,c)=+2 -> a, (b,c)=+0.5 -> b; votes a:2 b:1 c:0
        model = hand_built_svm([1.0, 2.0, 0.5])
        pred = predict_svm(model, SparseVector({}, 2))
        assert [lab for lab, _ in pred.ranking] == ["a", "b", "c"]
        assert [score for _, score in pred.ranking] == [2.0, 1.0, 0.0]

    def test_three_way_tie_resolved_by_signed_margin_sum(self):
        # (a,b)=+1 -> a, (a,c)=-3 -> c, (b,c)=+2 -> b: one vote each.
        # margin sums: a = 1 + (-3) = -2; b = -1 + 2 = 1; c = 3 - 2 = 1 -> b, c (lex), a
        model = hand_built_svm([1.0, -3.0, 2.0])
        pred = predict_svm(model, SparseVector({}, 2))
        assert [lab for lab, _ in pred.ranking] == ["b", "c", "a"]

    def test_two_classes_reduce_to_hyperplane_sign(self):
        model = SVMModel(
            classes=("a", "b"),
            pair_left=np.array([0]),
            pair_right=np.array([1]),
            weights=np.array([[1.0, -1.0]]),
            bias=np.array([0.0]),
            C=1.0,
            dimension=2,
        )
        assert predict_svm(model, SparseVector({0: 2}, 2)).label == "a"
        assert predict_svm(model, SparseVector({1: 3}, 2)).label == "b"

    def test_zero_vector_decided_by_biases(self):
        model = hand_built_svm([-1.0, -1.0, -1.0])  # b beats a, c beats a, c beats b
        assert predict_svm(model, SparseVector({}, 2)).label == "c"

    def test_prediction_deterministic(self):
        rows, labels = separable_rows()
        model = train_svm_ovo(zip(rows, labels))
        v = rows[0]
        assert predict_svm(model, v) == predict_svm(model, v)

    def test_dimension_mismatch_rejected(self):
        model = hand_built_svm([0.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            predict_svm(model, SparseVector({}, 9))

    def test_matches_independent_vote_reference_for_larger_class_counts(self):
        from itertools import combinations

        rng = np.random.default_rng(61)
        classes = tuple(f"c{i}" for i in range(5))
        dim = 6
        pairs = list(combinations(range(5), 2))
        for _ in range(30):
            model = SVMModel(
                classes=classes,
                pair_left=np.array([a for a, _ in pairs]),
                pair_right=np.array([b for _, b in pairs]),
                weights=rng.normal(size=(len(pairs), dim)),
                bias=rng.normal(size=len(pairs)),
                C=1.0,
                dimension=dim,
            )
            idx = rng.choice(dim, size=3, replace=False)
            v = SparseVector({int(i): int(rng.integers(1, 4)) for i in idx}, dim)

            # reference: explicit per-pair decisions, votes, and tie margins
            dense = np.zeros(dim)
            for i, c in v.items():
                dense[i] = c
            decision = {}
            votes = {c: 0.0 for c in classes}
            for pid, (a, b) in enumerate(pairs):
                f = float(model.weights[pid] @ dense + model.bias[pid])
                decision[(a, b)] = f
                votes[classes[a if f >= 0 else b]] += 1.0
            margin = {c: 0.0 for c in range(5)}
            for group_votes in set(votes.values()):
                group = [ci for ci in range(5) if votes[classes[ci]] == group_votes]
                if len(group) < 2:
                    continue
                for c in group:
                    for d in group:
                        if d == c:
                            continue
                        a, b = min(c, d), max(c, d)
                        margin[c] += decision[(a, b)] if c == a else -decision[(a, b)]
            expected = sorted(
                range(5), key=lambda ci: (-votes[classes[ci]], -margin[ci], classes[ci])
            )
            got = predict_svm(model, v)
            assert [lab for lab, _ in got.ranking] == [classes[ci] for ci in expected]


class TestSerialization:
    def test_mnb_round_trip_bit_exact(self, tmp_path):
        docs = [make_doc("1", ["x", "x"], ("A",)), make_doc("2", ["y"], ("B",))]
        vocab = build_vocabulary(docs)
        model = train_mnb([(vectorize(d.tokens, vocab), d.primary_label) for d in docs])
        loaded = load_model(save_model(model, tmp_path / "m.json"))
        assert isinstance(loaded, MNBModel)
        assert loaded.classes == model.classes
        assert loaded.dimension == model.dimension
        assert np.array_equal(loaded.log_prior, model.log_prior)
        assert np.array_equal(loaded.log_cond, model.log_cond)

    def test_svm_round_trip_bit_exact(self, tmp_path):
        rows, labels = separable_rows()
        model = train_svm_ovo(zip(rows, labels))
        loaded = load_model(save_model(model, tmp_path / "m.json"))
        assert isinstance(loaded, SVMModel)
        assert loaded.classes == model.classes
        assert np.array_equal(loaded.weights, model.weights)
        assert np.array_equal(loaded.bias, model.bias)
        for v in rows[:5]:
            assert predict_svm(loaded, v) == predict_svm(model, v)

    def test_unknown_version_rejected(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text('{"format_version": 99, "model_type": "mnb"}', encoding="utf-8")
        with pytest.raises(ValueError, match="version"):
            load_model(p)

    def test_unknown_type_rejected(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text('{"format_version": 1, "model_type": "tree"}', encoding="utf-8")
        with pytest.raises(ValueError, match="model type"):
            load_model(p)
