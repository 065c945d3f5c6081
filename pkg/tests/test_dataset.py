import numpy as np
import pytest

from miai.dataset import (
    CSV_HEADER,
    FEATURE_NAMES,
    FEATURE_SPECS,
    Dataset,
    DatasetError,
    EncodingError,
    ParseError,
    SchemaError,
    ValidationError,
    apply_standardizer,
    encode_audit_opinion,
    fit_standardizer,
    generate_synthetic,
    latent_risk,
    load_csv,
    split_train_test,
)


def _write(tmp_path, header, rows):
    path = tmp_path / "d.csv"
    lines = [",".join(header)] + [",".join(str(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _row(label=0, aou=4, base=0.1):
    return [label] + [base * (i + 1) for i in range(15)] + [aou]


class TestSchema:
    def test_sixteen_named_features(self):
        assert set(FEATURE_NAMES) == {
            "PrCb", "Igrb", "Roa", "Roe", "EBII", "Ocebi", "Lr", "Qr",
            "Rst", "Alr", "Sdtd", "Ditc", "Mtd", "Im", "Ebit", "Aou",
        }
        assert len(FEATURE_NAMES) == 16

    def test_positive_theory_signs(self):
        assert {f.name for f in FEATURE_SPECS if f.theory_sign == 1} == {"Alr", "Sdtd", "Ditc"}
        assert all(f.theory_sign in (1, -1) for f in FEATURE_SPECS)

    def test_csv_header(self):
        assert ",".join(CSV_HEADER) == "default,PrCb,Igrb,Roa,Roe,EBII,Ocebi,Lr,Qr,Rst,Alr,Sdtd,Ditc,Mtd,Im,Ebit,Aou"


class TestLoadCsv:
    def test_three_valid_rows(self, tmp_path):
        d = load_csv(_write(tmp_path, CSV_HEADER, [_row(0), _row(1, 2), _row(0, 1, 0.3)]))
        assert len(d) == 3
        assert d.y.tolist() == [0, 1, 0]
        assert d.X[1, -1] == 2.0
        assert d.feature_names == FEATURE_NAMES

    def test_missing_column_named(self, tmp_path):
        header = [h for h in CSV_HEADER if h != "Ebit"]
        rows = [[v for h, v in zip(CSV_HEADER, _row()) if h != "Ebit"]]
        with pytest.raises(SchemaError, match="Ebit"):
            load_csv(_write(tmp_path, header, rows))

    def test_aou_out_of_range_cites_row(self, tmp_path):
        rows = [_row() for _ in range(6)] + [_row(aou=5)]
        with pytest.raises(ValidationError, match="row 7"):
            load_csv(_write(tmp_path, CSV_HEADER, rows))

    def test_non_numeric_cell(self, tmp_path):
        rows = [_row(), _row()]
        rows[1][3] = "abc"
        with pytest.raises(ParseError, match=r"row 2, column 'Roa'"):
            load_csv(_write(tmp_path, CSV_HEADER, rows))

    def test_bad_label(self, tmp_path):
        with pytest.raises(ValidationError, match="row 1"):
            load_csv(_write(tmp_path, CSV_HEADER, [_row(label=2)]))

    def test_column_order_in_file_is_free(self, tmp_path):
        header = list(reversed(CSV_HEADER))
        d = load_csv(_write(tmp_path, header, [list(reversed(_row(1, 3)))]))
        assert d.X[0, -1] == 3.0 and d.y[0] == 1

    def test_round_trip_exact(self, tmp_path):
        data = generate_synthetic(200, 10, seed=5)
        path = tmp_path / "rt.csv"
        data.to_csv(path)
        assert load_csv(path) == data
        assert b"\r\n" not in path.read_bytes()


class TestAuditOpinion:
    @pytest.mark.parametrize("text,code", [
        ("unable to express an opinion", 1),
        ("unqualified opinion with emphasis of matter paragraph", 2),
        ("qualified opinion", 3),
        ("standard unqualified opinion", 4),
        ("  Standard Unqualified Opinion ", 4),
    ])
    def test_categories(self, text, code):
        assert encode_audit_opinion(text) == code

    def test_unknown(self):
        with pytest.raises(EncodingError):
            encode_audit_opinion("adverse opinion")


class TestDatasetInvariants:
    def test_rejects_wrong_width(self):
        with pytest.raises(ValidationError):
            Dataset(np.zeros((2, 15)), np.zeros(2))

    def test_rejects_non_finite(self):
        X = np.ones((1, 16))
        X[0, 0] = np.nan
        with pytest.raises(ValidationError):
            Dataset(X, [0])

    def test_read_only(self):
        d = generate_synthetic(50, 5, seed=0)
        with pytest.raises(ValueError):
            d.X[0, 0] = 1.0


class TestSplit:
    def test_ten_rows(self):
        d = generate_synthetic(10, 3, seed=0)
        s = split_train_test(d, 0.8, seed=1)
        assert (len(s.train), len(s.test)) == (8, 2)

    def test_full_size_split(self):
        d = generate_synthetic(6471, 50, seed=42)
        s = split_train_test(d, 0.8, seed=0)
        assert (len(s.train), len(s.test)) == (5177, 1294)

    def test_deterministic(self):
        d = generate_synthetic(100, 10, seed=0)
        a, b = split_train_test(d, 0.8, 9), split_train_test(d, 0.8, 9)
        assert a.train == b.train and a.test == b.test

    def test_partition_over_1000_seeds(self):
        d = generate_synthetic(57, 6, seed=0)
        for seed in range(1000):
            s = split_train_test(d, 0.8, seed)
            tr, te = set(s.train_index.tolist()), set(s.test_index.tolist())
            assert not tr & te
            assert tr | te == set(range(57))
            assert len(tr) == round(0.8 * 57)

    def test_single_class_warns(self):
        d = Dataset(np.tile(_row()[1:], (5, 1)), np.zeros(5))
        s = split_train_test(d, 0.8, 0)
        assert s.warnings

    def test_too_small(self):
        d = Dataset(np.array([_row()[1:]]), [0])
        with pytest.raises(DatasetError):
            split_train_test(d, 0.8, 0)


class TestStandardizer:
    def test_constant_column_clamped(self):
        X = np.column_stack([np.full(4, 3.0), np.arange(4.0)])
        with pytest.warns(UserWarning, match="zero-variance"):
            s = fit_standardizer(X)
        assert s.scale_[0] == 1.0
        assert np.all(apply_standardizer(s, X)[:, 0] == 0.0)

    def test_two_point_symmetry(self):
        X = np.array([[0.0], [2.0]])
        assert apply_standardizer(fit_standardizer(X), X).ravel().tolist() == [-1.0, 1.0]

    def test_moments_on_fit_data(self):
        d = generate_synthetic(500, 20, seed=2)
        Z = apply_standardizer(fit_standardizer(d), d.X)
        assert np.all(np.abs(Z.mean(axis=0)) < 1e-9)
        assert np.all(np.abs(Z.std(axis=0) - 1.0) < 1e-9)

    def test_inverse(self):
        d = generate_synthetic(100, 5, seed=2)
        s = fit_standardizer(d)
        np.testing.assert_allclose(s.inverse_transform(s.transform(d.X)), d.X, rtol=1e-12, atol=1e-12)

    def test_empty(self):
        with pytest.raises(DatasetError):
            fit_standardizer(np.zeros((0, 16)))


class TestGenerator:
    def test_full_size_counts(self):
        d = generate_synthetic(6471, 50, seed=42)
        assert len(d) == 6471 and d.n_defaults == 50

    @pytest.mark.parametrize("n_defaults", [0, 100, 150])
    def test_bad_default_count(self, n_defaults):
        with pytest.raises(DatasetError):
            generate_synthetic(100, n_defaults, seed=0)

    def test_bit_identical(self):
        a, b = generate_synthetic(300, 10, seed=11), generate_synthetic(300, 10, seed=11)
        assert a.to_csv_text() == b.to_csv_text()

    def test_aou_valid(self):
        d = generate_synthetic(2000, 30, seed=1)
        assert set(np.unique(d.X[:, -1])) <= {1.0, 2.0, 3.0, 4.0}

    def test_feature_risk_correlation_signs(self):
        d, risk = generate_synthetic(5000, 50, seed=3, return_risk=True)
        for j, spec in enumerate(FEATURE_SPECS):
            r = np.corrcoef(d.X[:, j], risk)[0, 1]
            assert np.sign(r) == spec.theory_sign, spec.name

    def test_linear_part_follows_theory(self):
        d = generate_synthetic(3000, 30, seed=4)
        r0 = latent_risk(d.X, nonlinearity=0.0)
        for j, spec in enumerate(FEATURE_SPECS):
            assert np.sign(np.corrcoef(d.X[:, j], r0)[0, 1]) == spec.theory_sign
