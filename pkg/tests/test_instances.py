import json
import math

import numpy as np
import pytest

from bisolve.instances import (
    DatasetMatrix,
    append_ones,
    build_instance,
    colinear_ls_bilevel,
    elastic_net_outer,
    elastic_net_ql,
    instance_descriptor,
    load_csv,
    make_analytic,
    make_colinear_ls,
    make_logistic,
    min_max_scale,
)
from bisolve.problems import CompositeOuter, SubgradientOuter, bregman_linearization_gap
from bisolve.quasi_lipschitz import mixture_sampler, ql_certify
from conftest import sample_box
from oracles import elastic_net_profile, grid_prox


class TestColinearLS:
    def test_shapes_and_targets(self):
        dm, obj = make_colinear_ls(60, 10, 3, 4, seed=1)
        assert dm.features.shape == (60, 14)  # 10 base + 3 colinear + intercept
        assert dm.targets.shape == (60,)
        assert dm.has_intercept

    def test_base_columns_scaled_to_unit_interval(self):
        dm, _ = make_colinear_ls(60, 10, 3, 4, seed=1)
        base = dm.features[:, :10]
        assert base.min() >= 0.0 and base.max() <= 1.0
        np.testing.assert_allclose(base.min(axis=0), 0.0, atol=1e-15)
        np.testing.assert_allclose(base.max(axis=0), 1.0, rtol=1e-15)

    def test_colinear_columns_make_gram_singular(self):
        dm, _ = make_colinear_ls(200, 50, 10, 10, seed=0)
        gram = dm.features.T @ dm.features
        eigs = np.linalg.eigvalsh(gram)
        assert eigs[0] < 1e-8 * eigs[-1]

    def test_full_rank_without_extras(self):
        dm, _ = make_colinear_ls(200, 20, 0, 5, seed=2)
        eigs = np.linalg.eigvalsh(dm.features.T @ dm.features)
        assert eigs[0] > 1e-10

    def test_value_at_least_squares_solution(self):
        # independent oracle: dense least-squares factorization
        dm, obj = make_colinear_ls(80, 12, 2, 4, seed=5)
        A, b = dm.features, dm.targets
        x_star, *_ = np.linalg.lstsq(A, b, rcond=None)
        residual = A @ x_star - b
        want = 0.5 * float(residual @ residual) / A.shape[0]
        assert obj(x_star) == pytest.approx(want, rel=1e-12)

    def test_solution_set_is_not_a_singleton(self):
        dm, obj = make_colinear_ls(100, 20, 4, 6, seed=7)
        A, b = dm.features, dm.targets
        x_min, *_ = np.linalg.lstsq(A, b, rcond=None)
        # shift along a null direction of A: same value, different norm
        _, s, vt = np.linalg.svd(A)
        null_dir = vt[-1]
        assert np.linalg.norm(A @ null_dir) < 1e-8
        x_other = x_min + 3.0 * null_dir
        assert abs(obj(x_other) - obj(x_min)) < 1e-10
        assert abs(np.linalg.norm(x_other) - np.linalg.norm(x_min)) > 1e-6

    def test_lipschitz_constant_is_top_eigenvalue(self):
        dm, obj = make_colinear_ls(50, 8, 1, 3, seed=9)
        want = np.linalg.eigvalsh(dm.features.T @ dm.features)[-1] / 50
        assert obj.smooth.lipschitz_grad == pytest.approx(want)

    def test_deterministic_under_seed(self):
        a1, _ = make_colinear_ls(30, 6, 2, 3, seed=42)
        a2, _ = make_colinear_ls(30, 6, 2, 3, seed=42)
        np.testing.assert_array_equal(a1.features, a2.features)
        np.testing.assert_array_equal(a1.targets, a2.targets)
        a3, _ = make_colinear_ls(30, 6, 2, 3, seed=43)
        assert not np.array_equal(a1.features, a3.features)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            make_colinear_ls(1, 5, 1, 2)
        with pytest.raises(ValueError):
            make_colinear_ls(10, 5, 1, 6)  # combo larger than base
        with pytest.raises(ValueError):
            make_colinear_ls(10, 5, -1, 2)


class TestLogistic:
    def test_value_at_zero_is_log_two(self):
        _, obj = make_logistic(50, 10, 0.3, seed=1)
        assert obj(np.zeros(10)) == pytest.approx(math.log(2.0), rel=1e-12)

    def test_gradient_matches_finite_differences(self, rng):
        _, obj = make_logistic(40, 8, 0.4, seed=2)
        h = 1e-6
        for x in sample_box(rng, 5, 8, half_width=1.0):
            g = obj.smooth.grad(x)
            for _ in range(3):
                e = rng.standard_normal(8)
                e /= np.linalg.norm(e)
                fd = (obj(x + h * e) - obj(x - h * e)) / (2 * h)
                assert abs(fd - float(g @ e)) <= 1e-5

    def test_single_row_gradient(self):
        from bisolve.instances import logistic_objective

        obj = logistic_objective(np.array([[1.0]]), np.array([1.0]))
        for x in (-2.0, 0.0, 1.5):
            sigmoid = 1.0 / (1.0 + math.exp(-x))
            got = obj.smooth.grad(np.array([x]))
            assert got[0] == pytest.approx(sigmoid - 1.0, rel=1e-12)

    def test_convexity_certificate(self, rng):
        _, obj = make_logistic(30, 6, 0.5, seed=3)
        xs = sample_box(rng, 256, 6, half_width=3.0)
        ys = sample_box(rng, 256, 6, half_width=3.0)
        for x, y in zip(xs, ys):
            assert bregman_linearization_gap(obj.smooth, y, x) >= -1e-10

    def test_features_are_count_like(self):
        dm, _ = make_logistic(100, 20, 0.1, seed=4)
        A = dm.features
        assert np.all(A >= 0)
        assert np.all(A == np.round(A))
        density = np.mean(A > 0)
        assert 0.05 <= density <= 0.2
        assert set(np.unique(dm.targets)) <= {0.0, 1.0}

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            make_logistic(10, 5, 0.0)
        with pytest.raises(ValueError):
            make_logistic(10, 5, 1.5)


class TestElasticNetOuter:
    def test_values(self):
        omega = elastic_net_outer()
        assert omega(np.zeros(3)) == 0.0
        assert omega(np.array([1.0, -1.0])) == pytest.approx(2.1)

    def test_prox_matches_grid_oracle(self, rng):
        omega = elastic_net_outer()
        got = omega.prox(1.0, np.array([2.0, -0.5]))
        want = grid_prox(elastic_net_profile, 1.0, np.array([2.0, -0.5]))
        np.testing.assert_allclose(got, want, atol=1e-4)
        for _ in range(20):
            t = float(rng.uniform(0.1, 0.6))
            x = rng.uniform(-1.5, 1.5, size=3)
            np.testing.assert_allclose(
                omega.prox(t, x), grid_prox(elastic_net_profile, t, x), atol=1e-4
            )

    def test_declared_growth_constants_certify(self):
        omega = elastic_net_outer()
        q = elastic_net_ql(4)
        witness = ql_certify(omega.subgrad, q, mixture_sampler(4, seed=17), 5000)
        assert witness is None


class TestScaling:
    def test_affine_map_onto_unit_interval(self):
        dm = DatasetMatrix(np.array([[2.0], [4.0], [6.0]]), np.zeros(3))
        out = min_max_scale(dm)
        np.testing.assert_allclose(out.features[:, 0], [0.0, 0.5, 1.0])

    def test_constant_column_convention(self):
        dm = DatasetMatrix(np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]), np.zeros(3))
        out = min_max_scale(dm)
        np.testing.assert_allclose(out.features[:, 0], [0.0, 0.0, 0.0])

    def test_idempotent(self, rng):
        dm = DatasetMatrix(rng.standard_normal((20, 4)), np.zeros(20))
        once = min_max_scale(dm)
        twice = min_max_scale(once)
        np.testing.assert_array_equal(once.features, twice.features)

    def test_intercept_exempt(self):
        dm = DatasetMatrix(np.array([[2.0], [4.0]]), np.zeros(2))
        dm = append_ones(dm)
        out = min_max_scale(dm)
        np.testing.assert_allclose(out.features[:, -1], [1.0, 1.0])
        np.testing.assert_allclose(out.features[:, 0], [0.0, 1.0])

    def test_append_ones_once(self):
        dm = DatasetMatrix(np.ones((3, 2)), np.zeros(3))
        dm = append_ones(dm)
        with pytest.raises(ValueError):
            append_ones(dm)

    def test_row_mismatch_rejected(self):
        with pytest.raises(ValueError):
            DatasetMatrix(np.ones((3, 2)), np.zeros(4))


class TestLoadCsv(object):
    def _write(self, tmp_path, text):
        p = tmp_path / "data.csv"
        p.write_text(text, encoding="utf-8")
        return str(p)

    def test_round_trip(self, tmp_path):
        path = self._write(tmp_path, "a,b,y\n1,2,3\n4,5.5,6\n")
        dm = load_csv(path, target_column="y")
        np.testing.assert_allclose(dm.features, [[1, 2], [4, 5.5]])
        np.testing.assert_allclose(dm.targets, [3, 6])

    def test_ragged_row_reports_line(self, tmp_path):
        path = self._write(tmp_path, "a,b\n1,2\n3\n")
        with pytest.raises(ValueError, match="line 3"):
            load_csv(path, target_column="b")

    def test_non_numeric_reports_location(self, tmp_path):
        path = self._write(tmp_path, "a,b\n1,2\n3,oops\n")
        with pytest.raises(ValueError, match="line 3, column 'b'"):
            load_csv(path, target_column="a")

    def test_missing_target_column(self, tmp_path):
        path = self._write(tmp_path, "a,b\n1,2\n")
        with pytest.raises(ValueError, match="no column named"):
            load_csv(path, target_column="z")

    def test_empty_file(self, tmp_path):
        path = self._write(tmp_path, "")
        with pytest.raises(ValueError, match="header"):
            load_csv(path, target_column="y")

    def test_no_data_rows(self, tmp_path):
        path = self._write(tmp_path, "a,y\n")
        with pytest.raises(ValueError, match="no data rows"):
            load_csv(path, target_column="y")


class TestAnalyticInstance:
    def test_reference_solution(self):
        inst = make_analytic()
        ref = inst.reference
        np.testing.assert_allclose(ref.x_prime, [0.5, 0.5])
        assert ref.phi_star == 0.0
        assert ref.omega_star == 0.25
        assert inst.inner(np.array([0.5, 0.5])) == pytest.approx(0.0)
        assert inst.outer_value(np.array([0.5, 0.5])) == pytest.approx(0.25)

    def test_outer_modes(self):
        assert isinstance(make_analytic("composite").outer, CompositeOuter)
        assert isinstance(make_analytic("subgradient").outer, SubgradientOuter)
        with pytest.raises(ValueError):
            make_analytic("mixed")


class TestDescriptors:
    def test_round_trip_reproduces_instance(self):
        desc = instance_descriptor("colinear-ls", n_rows=40, n_base_cols=8,
                                   n_colinear=2, combo_size=3, seed=11)
        text = json.dumps(desc)
        i1 = build_instance(json.loads(text))
        i2 = build_instance(json.loads(text))
        x = np.linspace(-1, 1, i1.dim)
        assert i1.inner(x) == i2.inner(x)
        assert i1.dim == 11
        assert "colinear-ls" in i1.name

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            build_instance({"kind": "mystery"})
        with pytest.raises(ValueError):
            instance_descriptor("mystery")

    def test_bilevel_builders_expose_modes(self):
        inst = colinear_ls_bilevel(30, 6, 1, 2, seed=1, outer_mode="subgradient")
        assert isinstance(inst.outer, SubgradientOuter)
        inst = colinear_ls_bilevel(30, 6, 1, 2, seed=1)
        assert isinstance(inst.outer, CompositeOuter)
        assert inst.outer.sigma.lipschitz_grad == 0.0
