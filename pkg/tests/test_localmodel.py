import numpy as np
import pytest

from mrpfg.errors import InvalidInputError
from mrpfg.localmodel import (
    LocalModelConfig,
    fit_lifted,
    identify_direct_baseline,
    identify_lifted_frf,
    solve_local_bin,
)


def local_data(rng, n_bins, fac, k0, cfg, deg_n, deg_l, deg_d=0):
    """Window around ``k0`` generated exactly by ``D(t) Z = N(t) W + L(t)``."""
    W = rng.standard_normal((n_bins, fac)) + 1j * rng.standard_normal((n_bins, fac))
    Z = np.zeros_like(W)
    Ns = [rng.standard_normal((fac, fac)) + 1j * rng.standard_normal((fac, fac)) for _ in range(deg_n + 1)]
    Ls = [rng.standard_normal(fac) + 1j * rng.standard_normal(fac) for _ in range(deg_l + 1)]
    Ds = [np.eye(fac)] + [0.2 * rng.standard_normal((fac, fac)) for _ in range(deg_d)]
    for r in range(-cfg.wsize, cfg.wsize + 1):
        t = r / cfg.wsize
        k = (k0 + r) % n_bins
        Nt = sum(N * t**s for s, N in enumerate(Ns))
        Lt = sum(L * t**s for s, L in enumerate(Ls))
        Dt = sum(D * t**s for s, D in enumerate(Ds))
        Z[k] = np.linalg.solve(Dt, Nt @ W[k] + Lt)
    return W, Z, Ns[0], Ls[0]


@pytest.mark.parametrize("fac", [1, 2, 3])
def test_recovers_degree_zero_exactly(rng, fac):
    cfg = LocalModelConfig(wsize=8, degree_n=0, degree_l=0, degree_d=0)
    W, Z, N0, L0 = local_data(rng, 64, fac, 20, cfg, 0, 0)
    fit = solve_local_bin(W, Z, 20, cfg)
    assert not fit.flagged
    np.testing.assert_allclose(fit.mhat, N0, rtol=0, atol=1e-10)
    np.testing.assert_allclose(fit.that, L0, rtol=0, atol=1e-10)


@pytest.mark.parametrize("denominator", ["full", "identity"])
def test_recovers_polynomial_model(rng, denominator):
    cfg = LocalModelConfig(wsize=30, degree_n=3, degree_l=3, degree_d=3, denominator=denominator)
    W, Z, N0, L0 = local_data(rng, 200, 3, 100, cfg, 3, 3)
    fit = solve_local_bin(W, Z, 100, cfg)
    np.testing.assert_allclose(fit.mhat, N0, atol=1e-8)
    np.testing.assert_allclose(fit.that, L0, atol=1e-8)


def test_recovers_rational_model(rng):
    cfg = LocalModelConfig(wsize=30, degree_n=2, degree_l=2, degree_d=2)
    W, Z, N0, L0 = local_data(rng, 200, 2, 50, cfg, 2, 2, deg_d=2)
    fit = solve_local_bin(W, Z, 50, cfg)
    np.testing.assert_allclose(fit.mhat, N0, atol=1e-8)
    np.testing.assert_allclose(fit.that, L0, atol=1e-8)


def test_scalar_denominator_recovers_scalar_rational(rng):
    cfg = LocalModelConfig(wsize=20, degree_n=2, degree_l=2, degree_d=1, denominator="scalar")
    n, fac, k0 = 100, 2, 40
    W = rng.standard_normal((n, fac)) + 1j * rng.standard_normal((n, fac))
    N0, N1 = rng.standard_normal((2, fac, fac))
    L0 = rng.standard_normal(fac)
    Z = np.zeros_like(W)
    for r in range(-cfg.wsize, cfg.wsize + 1):
        t = r / cfg.wsize
        Z[(k0 + r) % n] = ((N0 + t * N1) @ W[(k0 + r) % n] + L0) / (1 + 0.4 * t)
    fit = solve_local_bin(W, Z, k0, cfg)
    np.testing.assert_allclose(fit.mhat, N0, atol=1e-8)
    np.testing.assert_allclose(fit.that, L0, atol=1e-8)


def test_global_polynomial_recovered_away_from_wrap(rng):
    cfg = LocalModelConfig(wsize=10, degree_n=2, degree_l=1, degree_d=0)
    n, fac = 120, 2
    W = rng.standard_normal((n, fac)) + 1j * rng.standard_normal((n, fac))
    x = np.arange(n) / n
    M = np.array([[1 + x, 2 * x**2], [-x, 0.5 + 0 * x]]).transpose(2, 0, 1)
    T = np.stack([1 - x, x], axis=1)
    Z = np.einsum("kij,kj->ki", M, W) + T
    est = fit_lifted(W, Z, cfg)
    inner = slice(cfg.wsize, n - cfg.wsize)
    np.testing.assert_allclose(est.mhat[inner], M[inner], atol=1e-8)
    np.testing.assert_allclose(est.that[inner], T[inner], atol=1e-8)


def test_shift_equivariance(rng):
    cfg = LocalModelConfig(wsize=6, degree_n=1, degree_l=1, degree_d=1)
    W = rng.standard_normal((60, 2)) + 1j * rng.standard_normal((60, 2))
    Z = rng.standard_normal((60, 2)) + 1j * rng.standard_normal((60, 2))
    a = fit_lifted(W, Z, cfg)
    b = fit_lifted(np.roll(W, 7, axis=0), np.roll(Z, 7, axis=0), cfg)
    np.testing.assert_allclose(b.mhat, np.roll(a.mhat, 7, axis=0), atol=1e-9)


def test_zero_input_flags_every_bin(rng):
    cfg = LocalModelConfig(wsize=5, degree_n=1, degree_l=1, degree_d=1)
    W = np.zeros((30, 2), dtype=complex)
    Z = rng.standard_normal((30, 2)) + 0j
    est = fit_lifted(W, Z, cfg)
    assert est.flagged.all()
    assert np.all(np.isnan(est.mhat))


def test_window_too_short():
    cfg = LocalModelConfig(wsize=2, degree_n=3, degree_l=3, degree_d=3)
    with pytest.raises(InvalidInputError):
        cfg.check(3, 100)
    with pytest.raises(InvalidInputError):
        LocalModelConfig(wsize=60).check(1, 100)


@pytest.mark.parametrize("kw", [dict(denominator="diag"), dict(wsize=0), dict(degree_n=-1)])
def test_bad_config(kw):
    with pytest.raises(InvalidInputError):
        LocalModelConfig(**kw)


def test_identify_validates_records():
    cfg = LocalModelConfig(wsize=2, degree_n=0, degree_l=0, degree_d=0)
    with pytest.raises(InvalidInputError):
        identify_lifted_frf(np.ones(30), np.ones(31), 3, cfg)
    with pytest.raises(InvalidInputError):
        identify_lifted_frf(np.ones(31), np.ones(31), 3, cfg)


def test_baseline_on_lti_record(rng):
    """On an LTI record the single-rate baseline is accurate (not exact: the
    system is rational in exp(jw), not in the local frequency offset)."""
    from mrpfg.lti import StateSpaceModel, eval_frf, simulate

    sys = StateSpaceModel([[0.8, 0.2], [-0.2, 0.8]], [1.0, 0.0], [0.3, 1.0], 0.5, 1.0)
    n = 400
    w = rng.standard_normal(n)
    z = simulate(sys, np.tile(w, 3))[-n:]
    cfg = LocalModelConfig(wsize=8, degree_n=2, degree_l=2, degree_d=2)
    frf, flagged = identify_direct_baseline(w, z, cfg)
    expect = eval_frf(sys, 2 * np.pi * np.arange(n) / n)
    assert not flagged.any()
    np.testing.assert_allclose(frf, expect, rtol=1e-4)
