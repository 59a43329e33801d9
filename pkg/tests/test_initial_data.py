"""Cutoffs, mollification, truncation and the ill-prepared data families."""

import math

import numpy as np
import pytest

from machlab.calibration import DATA_HS_C, MOLLIFY_C, TRUNCATION_C
from machlab.errors import ConfigurationError
from machlab.funcspaces.balls import BallSampler, bmo_f_norm
from machlab.funcspaces.classf import one_plus_log
from machlab.initial_data import (
    PROFILES,
    DataRecipe,
    _profile_vorticity,
    cutoff,
    cutoff_derivative,
    ill_prepared_family,
    mollifier_kernel,
    mollify_cutoff,
    truncation_rot,
)
from machlab.spectral import (
    Grid,
    SpectralField,
    VectorField,
    biot_savart,
    curl2d,
    divergence,
    leray_decompose,
    lp_norm,
    sobolev_norm,
)

G = Grid(128, 2 * math.pi)
LOG = one_plus_log().verified()


def _lamb_oseen(grid):
    x1, x2 = grid.coords()
    r2 = x1**2 + x2**2
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(r2 > 0, -np.expm1(-r2) / (2 * np.pi * r2), 0.0)
    return VectorField.from_values(grid, -x2 * w, x1 * w)


def _smooth_velocity(grid):
    x1, x2 = grid.coords()
    return VectorField.from_values(grid, np.sin(x2) + 0.5 * np.cos(2 * x1), np.cos(x1))


class TestCutoff:
    def test_plateau_and_support(self):
        r = np.linspace(0, 3, 301)
        c = cutoff(r)
        assert np.all(c[r <= 1] == 1.0) and np.all(c[r >= 2] == 0.0)

    def test_derivative_matches_difference(self):
        r = np.linspace(0.9, 2.1, 1201)
        fd = np.gradient(cutoff(r), r)
        assert np.abs(fd - cutoff_derivative(r)).max() < 1e-3

    def test_kernel_normalized(self):
        for k in (2.0, 8.0, 1e6):
            ker = mollifier_kernel(G, k)
            assert ker.sum() == pytest.approx(1.0)
            assert ker[0, 0] == ker.max()


class TestMollifyCutoff:
    def test_converges_to_cut_field(self):
        g = Grid(256, 2 * math.pi)
        v = _smooth_velocity(g)
        chi = cutoff(g.radius() / 1.0)
        target = np.stack([chi * v.v1.values, chi * v.v2.values])
        errs = []
        for k in (4, 8, 16, 32):
            m = mollify_cutoff(v, k, 1.0)
            errs.append(lp_norm(np.hypot(*(m.values - target)), g, 2))
        ks = np.array([4, 8, 16, 32])
        assert np.all(np.diff(errs) < 0)
        assert np.all(np.array(errs) * ks <= errs[0] * 4 * (1 + 1e-9))

    def test_divergence_from_boundary_only(self):
        g = Grid(256, 2 * math.pi)
        for R in (0.75, 1.5):
            v = biot_savart(_profile_vorticity(g, DataRecipe(profile="vortex_pair")))
            m = mollify_cutoff(v, 8, R)
            dchi = np.abs(cutoff_derivative(np.linspace(1, 2, 10001))).max() / R
            # |div| = |rho_k * (grad chi_R . v)| and convolution contracts L^2
            assert lp_norm(divergence(m), g, 2) <= 1.05 * dchi * lp_norm(v, g, 2)

    def test_constant_unchanged_inside(self):
        g = Grid(256, 2 * math.pi)
        ones = np.ones((256, 256))
        v = VectorField.from_values(g, 2 * ones, -ones)
        m = mollify_cutoff(v, 16, 1.5)
        inner = g.radius() <= 1.5 - 1 / 16 - 2 * g.h
        assert np.abs(m.v1.values[inner] - 2.0).max() < 1e-12
        assert np.abs(m.v2.values[inner] + 1.0).max() < 1e-12

    def test_sobolev_bound_frozen(self):
        for prof in ("smooth_patch", "vortex_pair"):
            v = biot_savart(_profile_vorticity(G, DataRecipe(profile=prof)))
            for k in (2, 4, 8, 16):
                for R in (0.75, 1.5):
                    m = mollify_cutoff(v, k, R)
                    hs = math.hypot(sobolev_norm(m.v1, 2.5), sobolev_norm(m.v2, 2.5))
                    assert hs <= MOLLIFY_C * k**2.5 * R * v.magnitude().max()

    def test_radius_too_large(self):
        with pytest.raises(ConfigurationError, match="too large for box"):
            mollify_cutoff(_smooth_velocity(G), 4, 2.0)


class TestTruncation:
    def test_identity_inside_plateau(self):
        g = Grid(256, 2 * math.pi)
        r = g.radius()
        psi = np.exp(-1.0 / np.maximum(1 - r**2, 1e-300)) * (r < 1)
        v = VectorField.from_values(g, psi, -psi)
        tr = truncation_rot(v, 1.0)
        assert np.abs(tr.boundary.values).max() == 0.0
        w = curl2d(v).values
        assert np.array_equal(tr.total.values[r <= 1], w[r <= 1])

    def test_splitting_sums(self):
        v = biot_savart(_profile_vorticity(G, DataRecipe(profile="vortex_pair")))
        tr = truncation_rot(v, 1.0)
        assert np.allclose(tr.total.values, tr.main.values + tr.boundary.values, atol=1e-14)
        # against the spectral curl of the cut field
        chi = cutoff(G.radius())
        direct = curl2d(VectorField.from_values(G, chi * v.v1.values, chi * v.v2.values))
        assert lp_norm(direct - tr.total, G, 2) <= 0.05 * lp_norm(tr.total, G, 2)

    def test_norm_bound_frozen(self):
        S = BallSampler.default(G)
        dchi_max = np.abs(cutoff_derivative(np.linspace(1, 2, 10001))).max()
        for prof in ("smooth_patch", "vortex_pair"):
            w = _profile_vorticity(G, DataRecipe(profile=prof))
            v = biot_savart(w)
            base = bmo_f_norm(w, LOG, S) + lp_norm(w, G, 1.5)
            for R in (0.75, 1.0, 1.5):
                tr = truncation_rot(v, R)
                lhs = bmo_f_norm(tr.total, LOG, S) + lp_norm(tr.total, G, 1.5)
                assert lhs <= TRUNCATION_C * (1.0 + dchi_max / R) * base * (1 + 1e-9)

    @pytest.mark.parametrize("R", [1.0, 2.0])
    def test_boundary_term_halves(self, R):
        g = Grid(256, 8 * math.pi)
        v = _lamb_oseen(g)
        a = lp_norm(truncation_rot(v, R).boundary, g, 2)
        b = lp_norm(truncation_rot(v, 2 * R).boundary, g, 2)
        assert a / b == pytest.approx(2.0, rel=0.2)

    def test_approaches_vorticity(self):
        g = Grid(256, 8 * math.pi)
        v = _lamb_oseen(g)
        omega = SpectralField(g, values=np.exp(-(g.radius() ** 2)) / np.pi)
        errs = [lp_norm(truncation_rot(v, R).total - omega, g, 2) for R in (1.0, 2.0, 4.0)]
        assert errs[0] > errs[1] > errs[2]


class TestRecipe:
    def test_budget_violation(self):
        with pytest.raises(ConfigurationError, match="violates the budget"):
            DataRecipe(k=200.0).check()

    def test_unknown_profile(self):
        with pytest.raises(ConfigurationError, match="unknown profile"):
            DataRecipe(profile="vortex_sheet").check()

    def test_bad_epsilon(self):
        with pytest.raises(ConfigurationError, match=r"\(0, 1\)"):
            DataRecipe(epsilon=1.5).budget()

    def test_auto_index_in_budget(self):
        for eps in (0.1, 1e-3, 1e-6):
            rec = DataRecipe(k=None, epsilon=eps)
            k = rec.mollifier_index()
            assert k**2.5 * rec.R <= rec.budget() < (k + 1) ** 2.5 * rec.R

    def test_gamma_bar(self):
        assert DataRecipe(gamma=1.4).gamma_bar == pytest.approx(0.2)


class TestFamily:
    @pytest.mark.parametrize("profile", PROFILES)
    def test_ill_prepared(self, profile):
        d = ill_prepared_family(DataRecipe(profile=profile))
        assert np.abs(d.c.values).max() > 0.1
        pv, _ = leray_decompose(d.v)
        assert lp_norm(divergence(pv), G, 2) <= 1e-10
        assert abs(d.v.v1.mean()) < 1e-14 and abs(d.v.v2.mean()) < 1e-14
        assert lp_norm(divergence(d.v), G, 2) > 0.1

    @pytest.mark.parametrize("profile", PROFILES)
    def test_sobolev_budget_frozen(self, profile):
        for eps in (0.1, 0.05, 0.025, 0.0125, 0.01):
            d = ill_prepared_family(DataRecipe(profile=profile, epsilon=eps))
            assert d.hs_norm(2.5) <= DATA_HS_C * math.log(1 / eps) ** 0.5

    def test_well_prepared(self):
        d = ill_prepared_family(DataRecipe(well_prepared=True))
        assert np.abs(d.c.values).max() == 0.0
        assert lp_norm(divergence(d.v), G, 2) <= 1e-10

    def test_vorticity_norms_uniform(self):
        S = BallSampler.default(G)
        vals = []
        for eps in (0.1, 0.05, 0.025, 0.0125):
            d = ill_prepared_family(DataRecipe(k=None, epsilon=eps))
            vals.append(bmo_f_norm(d.omega, LOG, S))
        assert max(vals) / min(vals) <= 2.0

    def test_vorticity_converges(self):
        ref = ill_prepared_family(DataRecipe(k=40.0, C0=1e6)).omega
        errs = [lp_norm(ill_prepared_family(DataRecipe(k=None, epsilon=eps)).omega - ref, G, 1.5)
                for eps in (1e-1, 1e-3, 1e-6, 1e-12)]
        assert all(a > b for a, b in zip(errs, errs[1:]))

    def test_noise_is_seeded(self):
        a = ill_prepared_family(DataRecipe(noise_amplitude=0.1, seed=3)).c.values
        b = ill_prepared_family(DataRecipe(noise_amplitude=0.1, seed=3)).c.values
        c = ill_prepared_family(DataRecipe(noise_amplitude=0.1, seed=4)).c.values
        assert np.array_equal(a, b) and not np.array_equal(a, c)
