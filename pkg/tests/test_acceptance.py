'''
End to end checks of the quantization and correction results on
synthetic shapes.
'''
import csv

import numpy as np
import pytest

from pysdtq.grid import (GridSpec, ScalarField, BinaryField, ShapeParams, rasterize, binarize,
                         sample_sphere_sdf, sample_sphere_gradient)
from pysdtq.dt import Metric, signed_distance_transform
from pysdtq.stencil import weno5
from pysdtq.quant import enumerate_levels, required_cutoff, quantization_residual, flat_gradient_census
from pysdtq.reinit import (DitherParams, ReinitParams, Reinitializer, dither, reinitialize,
                           error_metrics)
from pysdtq.cli import main


CENTER = (5.0, 5.0)
RADIUS = 2.5


def _rows(path):
    with open(path, newline='') as f:
        return list(csv.reader(f))


def _rho(spec, center=CENTER):
    return np.sqrt(sum((x - c) ** 2 for x, c in zip(spec.mesh(), center)))


def _circle(dims, h):
    spec = GridSpec(dims, h)
    shape = ShapeParams.sphere(CENTER, RADIUS)
    b = rasterize(spec, shape)
    return spec, shape, b, signed_distance_transform(b)


def test_corrected_sdt_values_lie_on_the_levels():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        values = rng.random((32, 32)) < rng.uniform(0.05, 0.6)
        values[0, 0], values[-1, -1] = True, False
        phi = signed_distance_transform(BinaryField(GridSpec((32, 32)), values))
        ls = enumerate_levels(Metric(), 2, required_cutoff(phi))
        report = quantization_residual(phi, ls)
        assert report.max_residual < 1e-9
        assert report.skipped == 0


def test_1d_sphere_has_half_integer_levels():
    spec = GridSpec((11,), 1.0)
    b = rasterize(spec, ShapeParams.sphere((5.0,), 2.25))
    phi = signed_distance_transform(b).values
    x = spec.coordinates(0)
    inside = b.values
    oracle = np.array([
        0.5 - np.min(np.abs(x[~inside] - x[i])) if inside[i] else np.min(np.abs(x[inside] - x[i])) - 0.5
        for i in range(11)])
    np.testing.assert_array_equal(phi, oracle)
    np.testing.assert_array_equal(np.mod(phi, 1.0), 0.5)


def test_banding_census_matches_brute_force():
    spec, shape, b, sdt = _circle((21, 21), 0.5)
    h = spec.h
    cells = np.argwhere(np.ones(spec.dims, dtype=bool))
    targets = {True: np.argwhere(~b.values), False: np.argwhere(b.values)}
    phi = np.empty(spec.dims)
    for i, j in cells:
        inside = bool(b.values[i, j])
        d = np.sqrt(np.min(np.sum(((targets[inside] - (i, j)) * h) ** 2, axis=1)))
        phi[i, j] = h / 2 - d if inside else d - h / 2
    d0 = np.empty(spec.dims)
    d0[1:-1] = phi[2:] - phi[:-2]
    d0[0] = phi[1] - phi[0]
    d0[-1] = phi[-1] - phi[-2]
    x, y = spec.mesh()
    rho = np.hypot(x - 5.0, y - 5.0)
    gx = np.divide(x - 5.0, rho, out=np.zeros(spec.dims), where=rho > 0)
    oracle = int(np.count_nonzero((d0 == 0) & (np.abs(gx) > 0.1)))

    gradient = sample_sphere_gradient(spec, shape)
    census = flat_gradient_census(sdt, gradient[0], 0)
    assert census.count > 0
    assert census.count == oracle


def test_gradient_error_persists_under_refinement():
    quantized, exact = [], []
    for dims, h in (((11, 11), 1.0), ((21, 21), 0.5), ((41, 41), 0.25)):
        spec, shape, b, sdt = _circle(dims, h)
        rho = _rho(spec)
        annulus = (rho >= 1.5) & (rho <= 3.5)
        grad = sample_sphere_gradient(spec, shape)
        quantized.append(error_metrics(sdt, b, grad, mask=annulus).e_D)
        exact.append(error_metrics(sample_sphere_sdf(spec, shape), b, grad, mask=annulus).e_D)
    assert max(quantized) / min(quantized) <= 3
    assert exact[0] / exact[1] >= 4
    assert exact[1] / exact[2] >= 4


@pytest.fixture(scope='module')
def reinit_run():
    spec, shape, b, sdt = _circle((64, 64), 0.5)
    phi0 = dither(sdt, spec.h, DitherParams(2.0, 42))
    _, reports = reinitialize(phi0, b, sample_sphere_gradient(spec, shape), ReinitParams(400))
    return {r.iteration: r for r in reports}


@pytest.mark.slow
def test_reinitialization_never_changes_the_representation(reinit_run):
    assert sorted(reinit_run) == list(range(401))
    assert all(r.e_R == 0.0 for r in reinit_run.values())


@pytest.mark.slow
def test_reinitialization_convergence(reinit_run):
    assert reinit_run[20].e_MG < 0.5 * reinit_run[0].e_MG
    assert reinit_run[300].e_D < reinit_run[0].e_D
    assert reinit_run[400].e_MG < reinit_run[0].e_MG / 10


@pytest.mark.slow
def test_alpha_sweep(tmp_path):
    out = tmp_path / 'out'
    assert main(['sweep-alpha', '--out-dir', str(out), '-q', '--alphas', 'none,2,20']) == 0
    rows = _rows(out / 'sweep-alpha_combined.csv')[1:]
    final = {}
    for alpha in ('none', '2', '20'):
        runs = [r for r in rows if r[0] == alpha]
        first, last = float(runs[0][3]), float(runs[-1][3])
        assert int(runs[-1][1]) == 400
        assert last < first
        final[alpha] = last
    assert max(final.values()) <= 2 * min(final.values())


def test_weno5_is_fifth_order():
    errors = []
    for n in (64, 128, 256):
        spec = GridSpec((n,), 2 * np.pi / n)
        x = spec.coordinates(0)
        phi = ScalarField(spec, np.sin(x))
        # interior cells away from the inflection points of sin, where
        # the smoothness indicators degenerate
        keep = np.zeros(n, dtype=bool)
        keep[3:-3] = True
        keep &= np.abs(np.sin(x)) > 0.5
        errors.append(max(np.max(np.abs(weno5(phi, 0, side).values - np.cos(x))[keep])
                          for side in ('minus', 'plus')))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 4.5)


def test_one_step_keeps_the_exact_sdf():
    spec, shape, b, _ = _circle((41, 41), 0.25)
    phi = sample_sphere_sdf(spec, shape)
    r = Reinitializer(phi, b, params=ReinitParams(1))
    out = r.step()
    region = _rho(spec) >= 2 * spec.h
    assert np.max(np.abs(out.values - phi.values)[region]) <= 0.05 * spec.h


@pytest.mark.slow
def test_correction_removes_curvature_quantization(tmp_path):
    out = tmp_path / 'out'
    assert main(['curvature-hist', '--out-dir', str(out), '-q']) == 0
    stats = {r[0]: r for r in _rows(out / 'curvature-hist_stats.csv')[1:]}
    std = {name: float(r[3]) for name, r in stats.items()}
    assert std['corrected'] < 0.5 * std['quantized']
    assert float(stats['corrected'][4]) == pytest.approx(2 / 8, rel=0.15)


def _extended(v, axis):
    # two linearly extrapolated ghost cells per side
    v = np.moveaxis(v, axis, 0)
    low = [v[0] - k * (v[1] - v[0]) for k in (2, 1)]
    high = [v[-1] + k * (v[-1] - v[-2]) for k in (1, 2)]
    return np.moveaxis(np.stack(low + list(v) + high), 0, axis)


def _central4(v, axis, h):
    e = _extended(v, axis)
    out = np.empty(v.shape)
    for index in np.ndindex(*v.shape):
        k = index[axis] + 2

        def at(offset):
            i = list(index)
            i[axis] = k + offset
            return e[tuple(i)]

        out[index] = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h)
    return out


def test_error_metrics_match_a_direct_implementation():
    rng = np.random.default_rng(99)
    for _ in range(10):
        spec = GridSpec((9, 7), rng.choice([0.25, 0.5, 1.0]))
        phi = ScalarField(spec, rng.uniform(-2, 2, spec.dims))
        exact = [ScalarField(spec, rng.uniform(-1, 1, spec.dims)) for _ in range(2)]
        report = error_metrics(phi, binarize(phi), exact)

        g = [_central4(phi.values, a, spec.h) for a in range(2)]
        n = spec.size
        e_mg = np.sqrt(sum((np.hypot(g[0][c], g[1][c]) - 1) ** 2 for c in np.ndindex(*spec.dims))) / np.sqrt(n)
        e_d = np.sqrt(sum((g[0][c] - exact[0].values[c]) ** 2 + (g[1][c] - exact[1].values[c]) ** 2
                          for c in np.ndindex(*spec.dims))) / np.sqrt(n)
        assert report.e_MG == pytest.approx(e_mg, rel=1e-12)
        assert report.e_D == pytest.approx(e_d, rel=1e-12)


def test_dither_contract_over_many_seeds():
    spec, shape, b, sdt = _circle((21, 21), 0.5)
    bound = np.minimum(spec.h / 2.0, np.abs(sdt.values))
    for seed in range(1000):
        out = dither(sdt, spec.h, DitherParams(2.0, seed))
        np.testing.assert_array_equal(binarize(out).values, b.values)
        assert np.all(np.abs(out.values - sdt.values) <= bound + 1e-12)
