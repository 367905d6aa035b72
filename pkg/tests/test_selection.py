import numpy as np
import pytest

from sindykit import (
    ConfigError,
    DataError,
    LibrarySpec,
    NoiseSpec,
    ParetoPoint,
    SystemSpec,
    add_noise,
    pick_elbow,
    simulate,
    split,
    support,
    sweep,
)
from conftest import LORENZ_TRUE_SUPPORT


def point(lam, nnz, val, train=None):
    return ParetoPoint(threshold=lam, nnz_total=nnz,
                       train_residual=train if train is not None else val,
                       validation_residual=val)


@pytest.fixture(scope="module")
def noisy_lorenz_subsample(lorenz_dataset):
    ds = lorenz_dataset
    sub = ds.with_(times=ds.times[::10], states=ds.states[::10],
                   derivatives=ds.derivatives[::10])
    return add_noise(sub, NoiseSpec(eta=1.0, target="derivatives", seed=17))


class TestSplit:
    @pytest.fixture()
    def dataset(self):
        spec = SystemSpec("linear2d", x0=(2.0, 0.0), t_span=(0.0, 10.0), dt=0.01)
        return simulate(spec)

    def test_tail_split_sizes(self, dataset):
        train, val = split(dataset, 0.2, policy="tail")
        m = dataset.n_samples
        assert val.n_samples == int(round(0.2 * m))
        assert train.n_samples + val.n_samples == m
        assert val.times[0] > train.times[-1]  # temporal contiguity

    def test_seeded_blocks_reproducible_and_exhaustive(self, dataset):
        a_train, a_val = split(dataset, 0.3, policy="blocks", seed=4)
        b_train, b_val = split(dataset, 0.3, policy="blocks", seed=4)
        assert np.array_equal(a_val.times, b_val.times)
        assert a_train.n_samples + a_val.n_samples == dataset.n_samples
        c_train, c_val = split(dataset, 0.3, policy="blocks", seed=5)
        assert not np.array_equal(a_val.times, c_val.times)

    def test_block_split_keeps_train_overdetermined(self, dataset):
        spec = LibrarySpec(2, 5)
        train, _ = split(dataset, 0.2, policy="blocks", seed=0)
        assert train.n_samples > spec.n_terms

    def test_too_few_samples_rejected(self):
        from sindykit import TimeSeriesDataset
        tiny = TimeSeriesDataset(times=np.arange(5.0), states=np.zeros((5, 1)))
        with pytest.raises(DataError):
            split(tiny, 0.2)

    def test_fraction_validation(self, dataset):
        for bad in (0.0, 1.0, -0.5):
            with pytest.raises(ConfigError):
                split(dataset, bad)
        with pytest.raises(ConfigError):
            split(dataset, 0.5, policy="shuffle")


class TestSweep:
    def test_lorenz_plateau_and_monotone_bounds(self, noisy_lorenz_subsample):
        lams = np.logspace(-4, 0, 25)
        points, models = sweep(noisy_lorenz_subsample, LibrarySpec(3, 5), lams)
        assert len(points) == 25
        # least-squares optimality: the lam=0-like leftmost point minimizes
        # the training residual across the sweep
        assert points[0].train_residual <= min(p.train_residual for p in points) + 1e-12
        plateau = [p for p in points if p.nnz_total == 7]
        assert len(plateau) >= 5
        vals = [p.validation_residual for p in plateau]
        assert max(vals) - min(vals) < 0.05 * max(vals)
        correct = [m for p, (m, _) in zip(points, models)
                   if p.nnz_total == 7 and support(m) == LORENZ_TRUE_SUPPORT]
        assert len(correct) == len(plateau)

    def test_zero_threshold_is_dense_least_squares(self, noisy_lorenz_subsample):
        points, models = sweep(noisy_lorenz_subsample, LibrarySpec(3, 5),
                               np.array([0.0, 0.5]))
        dense, _ = models[0]
        assert points[0].nnz_total == dense.nnz() > 100  # nothing pruned

    def test_oversparse_threshold_gives_zero_model_unit_residual(self, noisy_lorenz_subsample):
        big = 1e6
        points, models = sweep(noisy_lorenz_subsample, LibrarySpec(3, 5),
                               np.array([0.0, big]))
        zero_model, _ = models[1]
        assert zero_model.nnz() == 0
        assert np.isclose(points[1].validation_residual, 1.0, atol=1e-12)

    def test_unsorted_thresholds_rejected(self, noisy_lorenz_subsample):
        with pytest.raises(ConfigError):
            sweep(noisy_lorenz_subsample, LibrarySpec(3, 5), np.array([0.1, 0.01]))

    def test_determinism(self, noisy_lorenz_subsample):
        lams = np.logspace(-3, -1, 5)
        a, _ = sweep(noisy_lorenz_subsample, LibrarySpec(3, 5), lams, seed=2)
        b, _ = sweep(noisy_lorenz_subsample, LibrarySpec(3, 5), lams, seed=2)
        assert a == b


class TestPickElbow:
    def test_three_point_corner(self):
        pts = [point(0.01, 10, 1e-6), point(0.1, 7, 1.1e-6), point(1.0, 3, 0.5)]
        assert pick_elbow(pts) == 0.1

    def test_flat_curve_falls_back_with_warning(self):
        pts = [point(10.0 ** -k, 5, 1e-3) for k in range(5, 0, -1)]
        with pytest.warns(UserWarning, match="degenerate"):
            lam = pick_elbow(pts)
        assert lam == max(p.threshold for p in pts)

    def test_invariant_under_uniform_residual_rescaling(self):
        rng = np.random.default_rng(3)
        pts = [point(10.0 ** e, n, v) for e, n, v in
               zip(np.linspace(-4, 0, 9),
                   [56, 40, 22, 11, 7, 7, 7, 3, 1],
                   [1e-6, 1.5e-6, 2e-6, 4e-6, 1e-5, 1.1e-5, 1.2e-5, 0.3, 0.9])]
        lam = pick_elbow(pts)
        scaled = [point(p.threshold, p.nnz_total, 137.0 * p.validation_residual)
                  for p in pts]
        assert pick_elbow(scaled) == lam

    def test_ties_resolve_to_larger_threshold(self):
        pts = [point(0.01, 10, 1e-6), point(0.05, 7, 1.1e-6),
               point(0.1, 7, 1.1e-6), point(1.0, 3, 0.5)]
        assert pick_elbow(pts) == 0.1

    def test_needs_three_points(self):
        with pytest.raises(DataError):
            pick_elbow([point(0.1, 5, 1.0), point(0.2, 4, 1.0)])

    def test_lorenz_sweep_elbow_lands_in_plateau(self, noisy_lorenz_subsample):
        lams = np.logspace(-4, 0, 25)
        points, models = sweep(noisy_lorenz_subsample, LibrarySpec(3, 5), lams)
        lam = pick_elbow(points)
        chosen = next(m for p, (m, _) in zip(points, models) if p.threshold == lam)
        assert chosen.nnz() == 7
        assert support(chosen) == LORENZ_TRUE_SUPPORT
