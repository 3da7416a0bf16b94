import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import a1_config
from oracles import riccati_numeric
from fragkin import diagnostics as D
from fragkin.errors import ContractError, ParameterError
from fragkin.grid import build_grid
from fragkin.solver import InitialData, Trajectory, solve
from fragkin.state import DensityState


# ---- Riccati envelope -------------------------------------------------------

def test_riccati_zero_rate_is_constant():
    assert D.riccati_envelope(0.7, 1.0, 2.0, 0.0, 1.0, 0.6, 5.0) == pytest.approx(0.7, abs=1e-15)


def test_riccati_closed_form_example():
    # c = k1 k2 / (1 - r) = 1 with k1 = 1, k2 = 0.4, r = 0.6; S = 1
    got = D.riccati_envelope(0.0, 0.5, 0.5, 1.0, 0.4, 0.6, 0.25)
    assert got == pytest.approx(0.5, rel=1e-12)
    assert got == pytest.approx(riccati_numeric(0.0, 1.0, 1.0, 0.25), rel=1e-9)


@given(
    B0=st.floats(0, 5),
    S=st.floats(0, 5),
    k1=st.floats(0.01, 3),
    t=st.floats(0, 0.05),
)
@settings(max_examples=40, deadline=None)
def test_riccati_matches_ode(B0, S, k1, t):
    got = D.riccati_envelope(B0, S, 0.0, k1, 1.0, 0.5, t)
    c = 2.0 * k1
    if math.isinf(got):
        assert 2 * c * (2 * B0 + S) * t >= 1
        return
    assert got == pytest.approx(riccati_numeric(B0, S, c, t), rel=1e-7, abs=1e-10)


def test_riccati_monotone_and_blows_up():
    ts = np.linspace(0, 0.24, 30)
    vals = [D.riccati_envelope(0.0, 0.5, 0.5, 1.0, 0.4, 0.6, t) for t in ts]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    # blow-up at 1 / (2 c u0) = 0.5
    assert D.riccati_envelope(0.0, 0.5, 0.5, 1.0, 0.4, 0.6, 0.5) == D.BLOWUP
    assert D.riccati_envelope(0.0, 0.5, 0.5, 1.0, 0.4, 0.6, 3.0) == D.BLOWUP


def test_riccati_rejects_bad_r():
    with pytest.raises(ParameterError):
        D.riccati_envelope(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.1)


def test_n0_envelope_constant_when_theta_one():
    assert D.n0_envelope(2.0, 1.0, 1.0, 1.0, 10.0) == pytest.approx(2.0)


def test_n0_envelope_blowup():
    # c0 u0 = 1 * 1 * 2, blow-up at t = 1/2
    assert D.n0_envelope(1.0, 1.0, 1.0, 2.0, 0.25) == pytest.approx(2.0 / 0.5 - 1.0)
    assert D.n0_envelope(1.0, 1.0, 1.0, 2.0, 0.5) == D.BLOWUP


# ---- Gronwall ---------------------------------------------------------------

def test_gronwall_examples():
    assert D.gronwall_envelope(1.0, 1.0, 0.0, 1.0) == pytest.approx(math.e, rel=1e-15)
    assert D.gronwall_envelope(0.3, 2.0, 5.0, 0.0) == pytest.approx(0.3)
    assert D.gronwall_envelope(0.0, 1.7, 0.0, np.linspace(0, 3, 7)).tolist() == [0.0] * 7


def test_gronwall_requires_positive_rate():
    with pytest.raises(ParameterError):
        D.gronwall_envelope(1.0, 0.0, 0.0, 1.0)


@given(C0=st.floats(0, 10), C2=st.floats(1e-3, 5), C3=st.floats(0, 10), t=st.floats(0, 2))
def test_gronwall_solves_linear_ode(C0, C2, C3, t):
    # y' = C2 y + C3, y(0) = C0
    h = 1e-6
    y = D.gronwall_envelope(C0, C2, C3, t)
    dy = (D.gronwall_envelope(C0, C2, C3, t + h) - D.gronwall_envelope(C0, C2, C3, max(t - h, 0))) / (t + h - max(t - h, 0))
    assert dy == pytest.approx(C2 * y + C3, rel=1e-4, abs=1e-6)


def test_fit_gronwall_tight_covers_samples():
    t = np.linspace(0, 1, 11)
    phi = 0.1 * np.exp(0.7 * t) * (1 + 0.01 * np.sin(9 * t))
    fit = D.fit_gronwall(t, phi)
    assert np.all(phi <= fit.envelope(t) * (1 + 1e-12))


# ---- trajectory diagnostics -------------------------------------------------

def _traj_from(values, times, grid):
    snaps = [DensityState(grid, v, time=t) for v, t in zip(values, times)]
    return Trajectory(a1_config(), snaps, lost_mass=[0.0] * len(snaps))


def test_mass_drift_single_snapshot_is_zero():
    grid = build_grid(4.0, 8)
    tr = _traj_from([np.ones(grid.cell_count)], [0.0], grid)
    assert D.mass_drift(tr) == 0.0
    assert D.mass_balance(tr) == 0.0


@given(st.lists(st.floats(0.1, 10), min_size=2, max_size=6, unique=True))
def test_mass_drift_invariant_under_time_relabelling(raw_times):
    grid = build_grid(4.0, 8)
    rng = np.random.default_rng(0)
    vals = rng.uniform(0.5, 1.5, size=(len(raw_times), grid.cell_count))
    times = np.sort(raw_times)
    a = D.mass_drift(_traj_from(vals, times, grid))
    b = D.mass_drift(_traj_from(vals, times**2 + 3.0, grid))
    assert a == b


def test_zero_initial_data_stays_zero():
    tr = solve(a1_config(T=0.1, initial=InitialData(amplitude=0.0, number=None)))
    assert np.all(tr.values == 0.0)
    assert D.mass_drift(tr) == 0.0
    assert all(r.passed for r in D.moment_bounds_check(tr, 0.6))


def test_moment_reports_on_a1(a1):
    reports = {r.name: r for r in D.moment_bounds_check(a1, 0.6)}
    assert reports["N1 conserved"].passed
    assert reports["N2 <= N2(0)"].passed
    assert reports["N2 non-increasing"].passed
    assert reports["N_-0.6 Riccati envelope"].passed
    assert reports["N0 envelope"].passed
    assert D.mass_drift(a1) <= 1e-6


def test_uniqueness_distance_identical_is_zero(a1):
    assert np.all(D.uniqueness_distance(a1, a1, 1.0, 0.25) == 0.0)
    psi = D.uniqueness_sum(a1, a1, 1.0, 0.25)
    assert np.all(psi > 0)


def test_uniqueness_rejects_bad_exponents(a1):
    with pytest.raises(ParameterError):
        D.uniqueness_distance(a1, a1, 1.0, 0.6, sigma=0.5)


def test_pair_checks_grid(a1):
    other = solve(a1_config(cells_per_decade=16, T=0.5))
    with pytest.raises(ContractError):
        D.uniqueness_distance(a1, other, 1.0, 0.25)


def test_perturbed_data_stays_in_gronwall_envelope(a1):
    b = solve(a1_config(initial=InitialData(number=1.01)))
    phi = D.uniqueness_distance(a1, b, 1.0, 0.25)
    psi = D.uniqueness_sum(a1, b, 1.0, 0.25)
    theta_max = a1.config.fragmentation.theta_max
    fit = D.fit_gronwall(a1.times, phi, psi, rate_scale=a1.config.collision.k1 * (1.0 + theta_max))
    assert fit.C0 == pytest.approx(phi[0])
    assert np.all(phi <= fit.envelope(a1.times) * (1 + 1e-12))


def test_sup_relative_difference_identical(a1):
    assert D.sup_relative_difference(a1, a1) == 0.0


def test_zero_extend_outside_domain():
    grid = build_grid(4.0, 8)
    s = DensityState(grid, np.arange(1.0, grid.cell_count + 1))
    out = D.zero_extend(s, [0.1, 0.25, 1.0, 4.0, 5.0])
    assert out[0] == 0.0 and out[-1] == 0.0
    assert out[1] == 1.0 and out[3] == grid.cell_count


def test_refinement_identical_n_gives_zero():
    cfg = a1_config(T=0.1, cells_per_decade=16)
    table = D.refinement_study(cfg, [4.0, 4.0], (0.5, 2.0))
    assert table.sup_differences == [0.0]
    assert table.cauchy
    assert table.mass_spread == 0.0


def test_refinement_window_must_fit():
    with pytest.raises(ParameterError):
        D.refinement_study(a1_config(T=0.1), [4.0, 8.0], (0.1, 2.0))


def test_refinement_threads_do_not_change_result():
    cfg = a1_config(T=0.1, cells_per_decade=16)
    a = D.refinement_study(cfg, [4.0, 8.0], (0.5, 2.0), workers=1)
    b = D.refinement_study(cfg, [4.0, 8.0], (0.5, 2.0), workers=2)
    assert a.to_dict() == b.to_dict()
