import copy

import numpy as np
import pytest

from miai.agreement import (
    PairingError,
    PublishedTables,
    UndefinedMiaiError,
    check_fixture,
    compute_miai,
    cosine_similarity,
    published_tables,
    sign_consistency,
    theory_table,
)
from miai.attribution import AttributionVector
from miai.models import ALL_KINDS, ModelKind

from oracles import raw_fixture, recount_sign_matches

PUBLISHED_MIAI = {"LR": 0.3459, "DT": 0.1708, "RF": 0.1430, "GBT": -0.0182}


def vec(method, values, kind="LR"):
    return AttributionVector(method, kind, 0.0, values)


class TestCosine:
    def test_self(self):
        z = np.random.default_rng(0).normal(size=16)
        assert cosine_similarity(z, z) == pytest.approx(1.0, abs=1e-15)

    def test_antipodal(self):
        z = np.random.default_rng(1).normal(size=16)
        assert cosine_similarity(z, -z) == pytest.approx(-1.0, abs=1e-15)

    def test_worked_example(self):
        z = np.zeros(16)
        w = np.zeros(16)
        z[:2], w[:2] = [1, 2], [2, 1]
        assert cosine_similarity(z, w) == pytest.approx(0.8, abs=1e-15)

    def test_zero_vector(self):
        with pytest.raises(UndefinedMiaiError):
            cosine_similarity(np.zeros(16), np.ones(16))

    def test_properties_10000_pairs(self):
        rng = np.random.default_rng(2)
        for _ in range(10_000):
            z, w = rng.normal(size=16), rng.normal(size=16)
            a, b = rng.uniform(0.01, 100, size=2)
            c = cosine_similarity(z, w)
            assert -1.0 <= c <= 1.0
            assert abs(cosine_similarity(a * z, b * w) - c) <= 1e-12
            assert cosine_similarity(-z, w) == -c
            assert cosine_similarity(w, z) == c

    def test_clamped_for_near_parallel(self):
        z = np.full(16, 0.1)
        assert cosine_similarity(z, z * (1 + 1e-16)) <= 1.0


class TestComputeMiai:
    def test_identical(self):
        c = np.linspace(-1, 2, 16)
        assert compute_miai(vec("LIME", c), vec("SHAP", c)).miai == pytest.approx(1.0, abs=1e-15)

    def test_positive_scaling(self):
        c = np.linspace(-1, 2, 16)
        assert compute_miai(vec("LIME", 3 * c), vec("SHAP", c)).miai == pytest.approx(1.0, abs=1e-15)

    def test_stored_vectors_reproduce_score(self):
        rng = np.random.default_rng(3)
        r = compute_miai(vec("LIME", rng.normal(size=16)), vec("SHAP", rng.normal(size=16)))
        z, w = r.shap_vector, r.lime_vector
        assert abs(r.miai - z @ w / (np.linalg.norm(z) * np.linalg.norm(w))) <= 1e-12

    def test_method_mismatch(self):
        c = np.ones(16)
        with pytest.raises(PairingError):
            compute_miai(vec("SHAP", c), vec("SHAP", c))

    def test_model_mismatch(self):
        c = np.ones(16)
        with pytest.raises(PairingError):
            compute_miai(vec("LIME", c, "LR"), vec("SHAP", c, "DT"))

    def test_zero_vector(self):
        with pytest.raises(UndefinedMiaiError):
            compute_miai(vec("LIME", np.zeros(16)), vec("SHAP", np.ones(16)))


class TestSigns:
    def test_theory_table(self):
        t = {s.name: s.theory_sign for s in theory_table()}
        assert t["Alr"] == 1 and t["Roa"] == -1
        assert sum(v == 1 for v in t.values()) == 3

    def test_identical_vectors_match_everywhere(self):
        c = np.linspace(-1, 1, 16) + 0.01
        table = sign_consistency(vec("LIME", c), vec("SHAP", c))
        assert table.lime_matches_shap == 16

    def test_near_zero_matches_nothing(self):
        c = np.ones(16)
        c[0] = 1e-13
        table = sign_consistency(vec("LIME", c), vec("SHAP", c))
        assert table.rows[0].lime_sign == 0
        assert not table.rows[0].lime_matches_shap
        assert table.lime_matches_shap == 15

    def test_fixture_dt_aou_is_sign_zero(self):
        t = published_tables()
        table = sign_consistency(t.lime_vector("DT"), t.shap_vector("DT"))
        aou = table.rows[-1]
        assert aou.feature == "Aou" and aou.lime_sign == 0
        assert not (aou.lime_matches_shap or aou.lime_matches_theory)

    @pytest.mark.parametrize("model", ["LR", "DT", "RF", "GBT"])
    def test_fixture_counts_equal_recount_oracle(self, model):
        t = published_tables()
        table = sign_consistency(t.lime_vector(model), t.shap_vector(model))
        assert table.lime_matches_shap == recount_sign_matches(raw_fixture(), model)

    def test_recount_values(self):
        # counts from the embedded attribution columns as printed
        doc = raw_fixture()
        assert [recount_sign_matches(doc, m) for m in ("LR", "DT", "RF", "GBT")] == [8, 5, 5, 11]


class TestFixture:
    def test_layout(self):
        t = published_tables()
        assert t.feature_order[0] == "PrCb" and len(t.feature_order) == 16
        assert t.lime[ModelKind.RANDOM_FOREST]["Rst"] == "0.000827"
        assert t.shap[ModelKind.LOGISTIC_REGRESSION]["Igrb"] == "23.4839"
        assert t.lime[ModelKind.DECISION_TREE]["Aou"] == "0.0000"

    @pytest.mark.parametrize("model", ["LR", "DT", "RF", "GBT"])
    def test_published_miai(self, model):
        t = published_tables()
        r = compute_miai(t.lime_vector(model), t.shap_vector(model))
        assert abs(r.miai - PUBLISHED_MIAI[model]) <= 0.02

    def test_printed_sign_tables_theory_column(self):
        t = published_tables()
        expected = [s.theory_sign for s in theory_table()]
        assert t.printed_signs(t.lime_signs, "theory") == expected
        assert t.printed_signs(t.shap_signs, "theory") == expected

    def test_check_reports_miai_within_tolerance(self):
        result = check_fixture()
        assert all(abs(result.miai[k] - result.expected[k]) <= 0.02 for k in ALL_KINDS)

    def test_check_gates_on_lr_sign_count(self):
        assert check_fixture(lr_sign_matches=8).passed
        assert check_fixture(lr_sign_matches=7).failing_models == [ModelKind.LOGISTIC_REGRESSION]

    def test_flipped_large_component_names_model(self):
        doc = copy.deepcopy(raw_fixture())
        doc["table4_shap"]["DT"]["Roa"] = "0.0086"
        result = check_fixture(PublishedTables.from_dict(doc), lr_sign_matches=8)
        assert not result.passed
        assert result.failing_models == [ModelKind.DECISION_TREE]
