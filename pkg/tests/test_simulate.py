import json

import numpy as np
import pytest

from sparserc.choicemodel import logit_kernel
from sparserc.simulate import (
    McConfig,
    MixtureComponent,
    MixtureDgp,
    dgp_from_json,
    dgp_to_json,
    draw_coefficients,
    four_normal_mixture,
    make_dataset,
    report_from_json,
    report_to_json,
    run_experiment,
    simulate_choices,
    two_normal_mixture,
    write_table_csv,
)


class TestMixtureDgp:
    def test_two_normal_parameters(self):
        dgp = two_normal_mixture(3)
        means = [c.mean for c in dgp.components]
        np.testing.assert_allclose(means[0], -1.5)
        np.testing.assert_allclose(means[1], 1.5)
        cov = dgp.components[0].cov
        np.testing.assert_allclose(np.diag(cov), 0.4)
        assert cov[0, 1] == 0.1

    def test_four_normal_parameters(self):
        dgp = four_normal_mixture(2)
        means = sorted(c.mean[0] for c in dgp.components)
        np.testing.assert_allclose(means, [-2.5, -0.8, 0.8, 2.5])
        cov = dgp.components[0].cov
        np.testing.assert_allclose(np.diag(cov), 0.1)
        assert cov[0, 1] == pytest.approx(0.025)
        assert all(c.weight == 0.25 for c in dgp.components)

    def test_rejects_non_spd_covariance(self):
        with pytest.raises(np.linalg.LinAlgError):
            MixtureComponent(1.0, np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_rejects_bad_weights(self):
        comp = MixtureComponent(0.6, np.zeros(1), np.eye(1))
        with pytest.raises(ValueError, match="sum"):
            MixtureDgp(components=(comp, comp))

    def test_json_round_trip(self):
        dgp = four_normal_mixture(3)
        back = dgp_from_json(json.loads(json.dumps(dgp_to_json(dgp))))
        for a, b in zip(dgp.components, back.components):
            assert a.weight == b.weight
            np.testing.assert_array_equal(a.mean, b.mean)
            np.testing.assert_array_equal(a.cov, b.cov)


class TestDrawCoefficients:
    def test_degenerate_component(self):
        dgp = MixtureDgp(
            components=(MixtureComponent(1.0, np.array([2.0, -1.0]), np.eye(2) * 1e-18),)
        )
        draws = draw_coefficients(dgp, 100, np.random.default_rng(0))
        np.testing.assert_allclose(draws, np.tile([2.0, -1.0], (100, 1)), atol=1e-6)

    def test_symmetric_means_average_to_zero(self):
        dgp = two_normal_mixture(2)
        draws = draw_coefficients(dgp, 1_000_000, np.random.default_rng(1))
        # per-dimension variance is 0.4 + 1.5^2, so 3 SE is ~0.0049
        se = np.sqrt((0.4 + 1.5**2) / 1_000_000)
        assert np.abs(draws.mean(axis=0)).max() < 3 * se

    def test_component_covariance_recovered(self):
        comp = two_normal_mixture(3).components[0]
        dgp = MixtureDgp(components=(MixtureComponent(1.0, comp.mean, comp.cov),))
        draws = draw_coefficients(dgp, 1_000_000, np.random.default_rng(2))
        cov = np.cov(draws.T)
        # moment SEs at this sample size are below 0.002
        np.testing.assert_allclose(cov, comp.cov, atol=0.006)

    def test_coverage_of_estimation_box(self):
        for dgp in (two_normal_mixture(2), four_normal_mixture(2)):
            draws = draw_coefficients(dgp, 1_000_000, np.random.default_rng(3))
            inside = (np.abs(draws) <= 4.0).all(axis=1).mean()
            assert inside >= 0.998


class TestSimulateChoices:
    def test_zero_coefficients_uniform_choice(self):
        rng = np.random.default_rng(4)
        data = simulate_choices(np.zeros((120_000, 2)), 5, rng)
        freq_inside = data.y.mean(axis=0)
        se = np.sqrt((1 / 6) * (5 / 6) / 120_000)
        np.testing.assert_allclose(freq_inside, 1 / 6, atol=3 * se)
        outside = 1 - data.y.sum(axis=1).mean()
        assert outside == pytest.approx(1 / 6, abs=3 * se)

    def test_dominant_alternative_saturates(self):
        rng = np.random.default_rng(5)
        betas = np.ones((4000, 1))
        data = simulate_choices(betas, 3, rng)
        data.x[:, 0, 0] += 10.0
        util = data.x[:, :, 0]  # beta = 1
        assert (util.argmax(axis=1) == 0).mean() > 0.99

    def test_gumbel_race_matches_logit_probabilities(self):
        # fixed covariates and coefficient: empirical choice frequencies
        # match the analytic kernel within Monte Carlo error
        rng = np.random.default_rng(6)
        x_row = rng.normal(size=(3, 2))
        beta = np.array([0.8, -0.5])
        n = 1_000_000
        g = logit_kernel(x_row, beta)
        u = x_row @ beta + rng.gumbel(size=(n, 3))
        u0 = rng.gumbel(size=n)
        winner = np.argmax(np.column_stack([u, u0]), axis=1)
        freq = np.bincount(winner, minlength=4)[:3] / n
        se = np.sqrt(g * (1 - g) / n)
        assert (np.abs(freq - g) <= 3 * se + 1e-12).all()

    def test_outside_option_rows_all_zero(self):
        rng = np.random.default_rng(7)
        data = simulate_choices(np.zeros((5000, 1)), 2, rng)
        outside = data.y.sum(axis=1) == 0
        assert outside.any()
        assert (data.y.sum(axis=1)[~outside] == 1).all()


def _tiny_config(**kwargs):
    base = dict(
        dgp=two_normal_mixture(2),
        n_units=120,
        replicates=2,
        seed=77,
        sg_levels=(2,),
        r_draws=300,
        truth_samples=100_000,
        workers=1,
    )
    base.update(kwargs)
    return McConfig(**base)


class TestRunExperiment:
    def test_single_replicate_report_shape(self):
        report = run_experiment(_tiny_config(replicates=1))
        assert len(report.runs) == 1
        run = report.runs[0]
        assert run.kind == "sg"
        assert run.parameters == [5]
        assert len(run.ise) == 1
        assert run.rmise is not None and np.isfinite(run.rmise)

    def test_same_seed_identical_reports(self):
        a = report_to_json(run_experiment(_tiny_config()))
        b = report_to_json(run_experiment(_tiny_config()))
        assert a == b

    def test_worker_count_does_not_change_results(self):
        serial = report_to_json(run_experiment(_tiny_config()))
        parallel = report_to_json(run_experiment(_tiny_config(workers=2)))
        assert serial == parallel

    def test_multiple_estimators_and_table(self, tmp_path):
        report = run_experiment(_tiny_config(fkrb_q=(3,)))
        assert {r.kind for r in report.runs} == {"sg", "fkrb"}
        path = tmp_path / "table.csv"
        write_table_csv(report, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("n_units,level,fkrb_parameters")
        assert len(lines) == 2  # q=3 pairs with level 2

    def test_report_json_round_trip(self):
        report = run_experiment(_tiny_config())
        back = report_from_json(json.loads(json.dumps(report_to_json(report))))
        assert back.runs[0].rmise == report.runs[0].rmise
        assert back.config == report.config

    def test_eval_subsample(self):
        report = run_experiment(_tiny_config(eval_subsample=20))
        assert report.eval_points == 20

    def test_failed_replicates_flagged(self):
        from sparserc.estimator import SolverOptions

        # one solver iteration cannot converge: every replicate must fail
        # loudly in the report rather than vanish
        cfg = _tiny_config(solver=SolverOptions(max_iter=1))
        report = run_experiment(cfg)
        run = report.runs[0]
        assert run.n_failed == 2
        assert run.success_rate == 0.0
        assert run.rmise is None
        assert all("NonConvergenceError" in e for e in run.errors)

    def test_rmise_matches_definition(self):
        from sparserc.distribution import CdfEvaluation, rmise

        report = run_experiment(_tiny_config())
        pts = np.zeros((report.eval_points, 1))
        truth = CdfEvaluation(eval_points=pts, values=np.zeros(report.eval_points))
        evals = [
            CdfEvaluation(eval_points=pts, values=np.full(report.eval_points, np.sqrt(i)))
            for i in (1, 2)
        ]
        # rmise of constant per-replicate errors sqrt(1), sqrt(2) is sqrt(1.5)
        assert rmise(evals, truth) == pytest.approx(np.sqrt(1.5), abs=1e-12)
        ise = report.runs[0].ise
        assert report.runs[0].rmise == pytest.approx(np.sqrt(np.mean(ise)), abs=1e-15)

    def test_no_estimators_rejected(self):
        with pytest.raises(ValueError, match="no estimators"):
            run_experiment(_tiny_config(sg_levels=()))


class TestMakeDataset:
    def test_shapes(self):
        data = make_dataset(two_normal_mixture(2), 50, 4, np.random.default_rng(8))
        assert data.x.shape == (50, 4, 2)
        assert data.y.shape == (50, 4)
