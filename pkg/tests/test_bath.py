import math

import numpy as np
import pytest
from scipy import integrate

from lindblad_sdp.bath import (
    BathSpec,
    QuadratureConfig,
    bose_occupation,
    coefficient_pair,
    jn_plus_product,
    jn_product,
    principal_value_halfline,
    redfield_coefficients,
    spectral_density,
)
from lindblad_sdp.chain import ChainSpec, build_hamiltonian, diagonalize
from lindblad_sdp.errors import PoleError, QuadratureError, ValidationError


def oracle_pv(f, pole, upper):
    """Independent PV evaluation: symmetric-pair decomposition about the
    pole plus plain quadrature on the remainder, at 10x panel budget."""
    if pole <= 0.0 or pole >= upper:
        return integrate.quad(
            lambda w: f(w) / (w - pole), 0.0, upper, epsabs=1e-13, epsrel=1e-13, limit=2000
        )[0]
    h = min(pole, upper - pole)
    core = integrate.quad(
        lambda t: (f(pole + t) - f(pole - t)) / t, 0.0, h,
        epsabs=1e-13, epsrel=1e-13, limit=2000,
    )[0]
    rest = 0.0
    if pole - h > 0.0:
        rest += integrate.quad(
            lambda w: f(w) / (w - pole), 0.0, pole - h,
            epsabs=1e-13, epsrel=1e-13, limit=2000,
        )[0]
    if pole + h < upper:
        rest += integrate.quad(
            lambda w: f(w) / (w - pole), pole + h, upper,
            epsabs=1e-13, epsrel=1e-13, limit=2000,
        )[0]
    return core + rest


class TestBathSpec:
    def test_rejects_bad_parameters(self):
        with pytest.raises(ValidationError):
            BathSpec(site=1, inv_temperature=-1.0)
        with pytest.raises(ValidationError):
            BathSpec(site=1, inv_temperature=1.0, coupling=0.0)
        with pytest.raises(ValidationError):
            BathSpec(site=1, inv_temperature=1.0, cutoff=-2.0)
        with pytest.raises(ValidationError):
            BathSpec(site=1, inv_temperature=1.0, chem_potential=0.5)

    def test_quadrature_config_bounds(self):
        with pytest.raises(ValidationError):
            QuadratureConfig(upper_cutoff_multiple=2.0)
        with pytest.raises(ValidationError):
            QuadratureConfig(rel_tol=0.0)


class TestSpectralDensity:
    def test_negative_frequency(self):
        spec = BathSpec(site=1, inv_temperature=1.0)
        assert spectral_density(-1.0, spec) == 0.0

    def test_at_cutoff(self):
        spec = BathSpec(site=1, inv_temperature=1.0, coupling=1.0, cutoff=10.0)
        assert spectral_density(10.0, spec) == pytest.approx(3.6787944117144232, rel=1e-15)

    def test_zero_frequency_convention(self):
        spec = BathSpec(site=1, inv_temperature=1.0)
        assert spectral_density(0.0, spec) == 0.0


class TestBoseOccupation:
    def test_log_two(self):
        # beta (w - mu) = ln 2 gives exactly 1
        spec = BathSpec(site=1, inv_temperature=1.0)
        assert bose_occupation(math.log(2.0), spec) == pytest.approx(1.0, rel=1e-14)

    def test_underflow_safe(self):
        spec = BathSpec(site=1, inv_temperature=100.0)
        assert bose_occupation(50.0, spec) == 0.0

    def test_unit_frequency(self):
        spec = BathSpec(site=1, inv_temperature=1.0)
        assert bose_occupation(1.0, spec) == pytest.approx(0.58197670686932642, rel=1e-14)

    def test_pole(self):
        spec = BathSpec(site=1, inv_temperature=1.0, chem_potential=-1.0)
        with pytest.raises(PoleError):
            bose_occupation(-1.0, spec)


class TestJnProducts:
    def test_zero_frequency_limit(self):
        spec = BathSpec(site=1, inv_temperature=2.0, coupling=1.0)
        assert jn_product(0.0, spec) == pytest.approx(0.5, rel=1e-14)
        assert jn_plus_product(0.0, spec) == pytest.approx(0.5, rel=1e-14)

    def test_limit_continuity(self):
        spec = BathSpec(site=1, inv_temperature=2.0, coupling=1.0)
        assert jn_product(1e-12, spec) == pytest.approx(0.5, rel=1e-9)

    def test_unit_frequency_value(self):
        # frozen from a 30-digit mpmath evaluation of e^{-0.01} / (e - 1)
        spec = BathSpec(site=1, inv_temperature=1.0, coupling=1.0, cutoff=10.0)
        assert jn_product(1.0, spec) == pytest.approx(0.57618594188186494, rel=1e-14)

    def test_difference_is_spectral_density(self):
        spec = BathSpec(site=1, inv_temperature=1.7, coupling=0.8, cutoff=5.0)
        for w in (0.1, 1.0, 3.3, 12.0):
            assert jn_plus_product(w, spec) - jn_product(w, spec) == pytest.approx(
                spectral_density(w, spec), rel=1e-12
            )

    def test_negative_frequency(self):
        spec = BathSpec(site=1, inv_temperature=1.0)
        assert jn_product(-0.5, spec) == 0.0
        assert jn_plus_product(-0.5, spec) == 0.0


class TestPrincipalValue:
    def test_symmetric_pole_of_constant(self):
        spec = BathSpec(site=1, inv_temperature=1.0, cutoff=4.0)
        cfg = QuadratureConfig(upper_cutoff_multiple=3.0)
        upper = cfg.upper_limit(spec)
        val = principal_value_halfline(lambda w: 1.0, upper / 2.0, cfg, spec)
        assert abs(val) < 1e-10

    def test_constant_closed_form(self):
        # U = 1 + e, pole at 1: PV = log(e / 1) = 1
        spec = BathSpec(site=1, inv_temperature=1.0, cutoff=(1.0 + math.e) / 3.0)
        cfg = QuadratureConfig(upper_cutoff_multiple=3.0)
        val = principal_value_halfline(lambda w: 1.0, 1.0, cfg, spec)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_linear_integrand_closed_form(self):
        # PV int_0^10 w / (w - 2) dw = 10 + 2 log 4
        spec = BathSpec(site=1, inv_temperature=1.0, cutoff=10.0 / 4.0)
        cfg = QuadratureConfig(upper_cutoff_multiple=4.0)
        val = principal_value_halfline(lambda w: w, 2.0, cfg, spec)
        assert val == pytest.approx(12.772588722239781, rel=1e-12)

    def test_pole_outside_interval(self):
        spec = BathSpec(site=1, inv_temperature=1.0, cutoff=1.0)
        cfg = QuadratureConfig(upper_cutoff_multiple=3.0)
        # int_0^3 1 / (w + 1) dw = log 4
        val = principal_value_halfline(lambda w: 1.0, -1.0, cfg, spec)
        assert val == pytest.approx(math.log(4.0), rel=1e-12)

    def test_linearity(self):
        spec = BathSpec(site=1, inv_temperature=1.0, cutoff=3.0)
        cfg = QuadratureConfig(upper_cutoff_multiple=3.0)
        f = lambda w: math.exp(-w)
        g = lambda w: w * w
        pole = 2.0
        combined = principal_value_halfline(lambda w: 2.0 * f(w) - 0.5 * g(w), pole, cfg, spec)
        parts = 2.0 * principal_value_halfline(f, pole, cfg, spec) - 0.5 * principal_value_halfline(g, pole, cfg, spec)
        assert combined == pytest.approx(parts, abs=1e-9)

    def test_nonconvergence_raises(self):
        spec = BathSpec(site=1, inv_temperature=1.0, cutoff=10.0)
        cfg = QuadratureConfig(upper_cutoff_multiple=3.0, panels=10)
        with pytest.raises(QuadratureError) as err:
            principal_value_halfline(lambda w: math.sin(200.0 * w * w), 3.0, cfg, spec)
        assert err.value.achieved_tol is not None

    def test_matches_independent_oracle(self):
        spec = BathSpec(site=1, inv_temperature=1.0, coupling=1.0, cutoff=10.0)
        cfg = QuadratureConfig()
        upper = cfg.upper_limit(spec)
        for pole in (0.5, 2.0, 7.7, -3.0):
            got = principal_value_halfline(lambda w: jn_product(w, spec), pole, cfg, spec)
            want = oracle_pv(lambda w: jn_product(w, spec), pole, upper)
            assert got == pytest.approx(want, abs=1e-9)


class TestRedfieldCoefficients:
    def test_single_qubit_gap_values(self):
        eigs = diagonalize(build_hamiltonian(ChainSpec(n_qubits=1, onsite_energy=1.0)))
        spec = BathSpec(site=1, inv_temperature=1.0, coupling=1.0, cutoff=10.0)
        c, d = redfield_coefficients(eigs, spec)
        # energies ascending (-1, 1): gap E_2 - E_1 = +2 sits at [0, 1]
        want = 0.5 * jn_product(2.0, spec)
        assert c[0, 1].real == pytest.approx(want, rel=1e-12)
        assert c[1, 0].real == 0.0  # negative gap
        assert (d[0, 1] - c[0, 1]).real == pytest.approx(
            0.5 * spectral_density(2.0, spec), rel=1e-12
        )

    def test_zero_gap_limit(self):
        spec = BathSpec(site=1, inv_temperature=4.0, coupling=2.0)
        c, d = coefficient_pair(0.0, spec, QuadratureConfig())
        assert c == complex(0.25, 0.0)
        assert d == complex(0.25, 0.0)

    def test_detailed_balance_identity(self):
        eigs = diagonalize(
            build_hamiltonian(ChainSpec(n_qubits=2, onsite_energy=1.0, coupling=0.13))
        )
        for beta in (0.3, 1.0, 5.0):
            spec = BathSpec(site=1, inv_temperature=beta, coupling=0.7, cutoff=10.0)
            c, d = redfield_coefficients(eigs, spec)
            gaps = eigs.gap_table()
            mask = gaps > 1e-9
            boost = np.exp(beta * gaps[mask])
            assert np.allclose(d[mask].real, boost * c[mask].real, rtol=1e-12, atol=0)

    def test_full_table_against_brute_force_quadrature(self):
        eigs = diagonalize(
            build_hamiltonian(ChainSpec(n_qubits=2, onsite_energy=1.0, coupling=0.2))
        )
        spec = BathSpec(site=1, inv_temperature=1.0, coupling=1.0, cutoff=10.0)
        cfg = QuadratureConfig()
        c, d = redfield_coefficients(eigs, spec, cfg)
        upper = cfg.upper_limit(spec)
        gaps = eigs.gap_table()
        for a in range(4):
            for g in range(4):
                gap = gaps[a, g]
                if abs(gap) < 1e-12:
                    continue
                want_c = complex(
                    0.5 * jn_product(gap, spec),
                    -oracle_pv(lambda w: jn_product(w, spec), gap, upper),
                )
                want_d = complex(
                    0.5 * jn_plus_product(gap, spec),
                    -oracle_pv(lambda w: jn_plus_product(w, spec), gap, upper),
                )
                assert abs(c[a, g] - want_c) < 1e-8
                assert abs(d[a, g] - want_d) < 1e-8

    @pytest.mark.parametrize("beta", [0.1, 100.0])
    def test_tables_finite_at_extreme_temperatures(self, beta):
        eigs = diagonalize(
            build_hamiltonian(ChainSpec(n_qubits=2, onsite_energy=1.0, coupling=0.07))
        )
        spec = BathSpec(site=1, inv_temperature=beta, coupling=1.0, cutoff=10.0)
        c, d = redfield_coefficients(eigs, spec)
        assert np.all(np.isfinite(c.view(float)))
        assert np.all(np.isfinite(d.view(float)))
