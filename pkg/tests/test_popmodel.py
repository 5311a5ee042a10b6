import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sysreg.errors import DegenerateError, DomainError, ParseError, SchemaError
from sysreg.popmodel import (
    DesignParams,
    Population,
    calibrate_intraclass,
    intraclass_correlation,
    load_population,
    summarize,
    synthetic_population,
    systematic_variance,
)


def intraclass_bruteforce(values, k):
    """Direct O(N^2) sum over ordered pairs of frame positions in the same systematic sample."""
    v = np.asarray(values, dtype=float)
    d = v - v.mean()
    N = v.size
    n = N // k
    cross = sum(d[p] * d[q] for p, q in itertools.product(range(N), repeat=2) if p != q and p % k == q % k)
    return cross / ((n - 1) * float(d @ d))


# -- load_population ----------------------------------------------------------


def test_load_preserves_order():
    pop = load_population(io.StringIO("y,x\n1,2\n3,4\n5,6\n7,8\n"))
    assert pop.N == 4
    assert pop.units == [(1.0, 2.0), (3.0, 4.0), (5.0, 6.0), (7.0, 8.0)]


def test_load_column_order_and_case():
    pop = load_population(io.StringIO("X,Y\n2,1\n4,3\n"))
    assert pop.units == [(1.0, 2.0), (3.0, 4.0)]


def test_load_parse_error_row_number():
    with pytest.raises(ParseError) as exc:
        load_population(io.StringIO("y,x\nabc,1\n"))
    assert exc.value.row == 1
    with pytest.raises(ParseError) as exc:
        load_population(io.StringIO("y,x\n1,2\n3,4\n5,nan\n"))
    assert exc.value.row == 3


def test_load_schema_errors():
    with pytest.raises(SchemaError, match="x"):
        load_population(io.StringIO("y,z\n1,2\n"))
    with pytest.raises(SchemaError):
        load_population(io.StringIO(""))


def test_load_needs_two_units():
    with pytest.raises(DomainError):
        load_population(io.StringIO("y,x\n1,2\n"))


def test_load_from_path_176_rows(tmp_path):
    pop = synthetic_population(176, 16, rho=0.87, rho_y=0.5, seed=3)
    path = tmp_path / "strips.csv"
    path.write_text(pop.to_csv())
    again = load_population(path)
    assert again.N == 176
    np.testing.assert_array_equal(again.y, pop.y)
    np.testing.assert_array_equal(again.x, pop.x)


# -- design -----------------------------------------------------------------


def test_design_validation():
    assert DesignParams.from_sizes(120, 8).k == 15
    with pytest.raises(DomainError):
        DesignParams(N=10, n=3, k=3)
    with pytest.raises(DomainError):
        DesignParams.from_sizes(10, 3)
    with pytest.raises(DomainError):
        DesignParams.from_sizes(10, 1)


# -- summarize --------------------------------------------------------------


def test_summary_basic_quantities(pop12, design12):
    s = summarize(pop12, design12)
    assert s.ybar == pytest.approx(pop12.y.mean())
    assert s.s2_y == pytest.approx(np.var(pop12.y, ddof=1), rel=1e-12)
    assert s.s2_x == pytest.approx(np.var(pop12.x, ddof=1), rel=1e-12)
    assert s.rho == pytest.approx(np.corrcoef(pop12.y, pop12.x)[0, 1], rel=1e-12)
    assert s.theta == pytest.approx(1 / 4 - 1 / 12)
    assert s.c_y == pytest.approx(math.sqrt(s.s2_y) / s.ybar)


def test_intraclass_matches_bruteforce(pop12, design12):
    s = summarize(pop12, design12)
    assert s.rho_y == pytest.approx(intraclass_bruteforce(pop12.y, 3), rel=1e-12)
    assert s.rho_x == pytest.approx(intraclass_bruteforce(pop12.x, 3), rel=1e-12)


def test_intraclass_perfect_homogeneity():
    design = DesignParams.from_sizes(12, 4)
    # value depends only on the sample (frame position mod k)
    y = np.array([float(p % 3 + 1) for p in range(12)])
    assert intraclass_correlation(y, design) == pytest.approx(1.0)


def test_intraclass_lower_bound_when_sample_means_coincide():
    design = DesignParams.from_sizes(8, 4)
    # both samples have mean 10: every systematic sample is perfectly balanced
    y = np.array([11.0, 9.0, 9.0, 11.0, 11.0, 9.0, 9.0, 11.0])
    assert intraclass_correlation(y, design) == pytest.approx(-1 / 3)
    assert intraclass_bruteforce(y, 2) == pytest.approx(-1 / 3)


def test_intraclass_exactly_zero():
    # Deviations (per sample column) chosen so the ordered cross-product sum is 0:
    # column a = (1, 1, 1, -1) -> (sum)^2 - sum sq = 4 - 4 = 0; column b the negation.
    design = DesignParams.from_sizes(8, 4)
    dev = np.empty((4, 2))
    dev[:, 0] = [1, 1, 1, -1]
    dev[:, 1] = [-1, -1, -1, 1]
    y = dev.ravel() + 3.0
    assert intraclass_correlation(y, design) == pytest.approx(0.0, abs=1e-15)
    assert intraclass_bruteforce(y, 2) == pytest.approx(0.0, abs=1e-15)


def test_summarize_degenerate():
    design = DesignParams.from_sizes(4, 2)
    with pytest.raises(DegenerateError):
        summarize(Population([1.0, -1.0, 2.0, -2.0], [1, 2, 3, 4]), design)
    with pytest.raises(DegenerateError):
        summarize(Population([1.0, 2.0, 3.0, 4.0], [5, 5, 5, 5]), design)
    with pytest.raises(DomainError):
        summarize(Population([1.0, 2.0, 3.0, 4.0], [1, 2, 3, 4]), DesignParams.from_sizes(6, 2))


def test_summarize_permutation_sensitivity(pop12, design12):
    s = summarize(pop12, design12)
    perm = np.random.default_rng(4).permutation(12)
    t = summarize(Population(pop12.y[perm], pop12.x[perm]), design12)
    assert (t.ybar, t.s2_y) == pytest.approx((s.ybar, s.s2_y), rel=1e-12)
    assert t.rho == pytest.approx(s.rho, rel=1e-12)
    assert t.rho_y != pytest.approx(s.rho_y)


def test_row_column_decomposition_of_mean_square(desk_pop, desk_design):
    """Total SS = within-sample SS + n * between-sample SS."""
    m = desk_pop.y.reshape(desk_design.n, desk_design.k)
    within = float(np.sum((m - m.mean(axis=0)) ** 2))
    between = desk_design.n * float(np.sum((m.mean(axis=0) - m.mean()) ** 2))
    s2 = (within + between) / (desk_design.N - 1)
    assert s2 == pytest.approx(summarize(desk_pop, desk_design).s2_y, rel=1e-10)


@pytest.mark.parametrize("seed,rho_y", [(1, 0.9), (2, 0.2), (3, -0.05)])
def test_theta_form_vs_enumeration_variance(seed, rho_y):
    """theta {1 + (n-1) rho_Y} S_Y^2 is the enumeration variance times (N-n)/(N-1)."""
    pop = synthetic_population(120, 8, rho=0.6, rho_y=rho_y, seed=seed)
    design = DesignParams.from_sizes(120, 8)
    s = summarize(pop, design)
    theta_form = design.theta * s.factor_y * s.s2_y
    exact = systematic_variance(pop.y, design)
    assert theta_form == pytest.approx(exact * (design.N - design.n) / (design.N - 1), rel=1e-10)
    cal = calibrate_intraclass(s, pop, design)
    assert design.theta * cal.factor_y * cal.s2_y == pytest.approx(exact, rel=1e-10)
    assert design.theta * cal.factor_x * cal.s2_x == pytest.approx(
        systematic_variance(pop.x, design), rel=1e-10
    )


def test_synthetic_hits_targets():
    pop = synthetic_population(
        176,
        16,
        rho=0.871,
        rho_y=0.9589,
        ybar=282.6136,
        xbar=6.9943,
        cv_y=math.sqrt(24114.67) / 282.6136,
        cv_x=math.sqrt(8.76) / 6.9943,
        seed=11,
    )
    s = summarize(pop, DesignParams.from_sizes(176, 16))
    assert s.ybar == pytest.approx(282.6136, rel=1e-10)
    assert s.s2_y == pytest.approx(24114.67, rel=1e-10)
    assert s.s2_x == pytest.approx(8.76, rel=1e-10)
    assert s.rho == pytest.approx(0.871, abs=1e-10)
    assert s.rho_y == pytest.approx(0.9589, abs=1e-10)
    assert s.rho_x == pytest.approx(0.9589, abs=1e-10)


def test_synthetic_stratum_ratio():
    pop = synthetic_population(176, 16, rho=0.8, rho_y=0.5, ms_ratio=0.75, tail=0.25, seed=2)
    tail = pop.y[-44:]
    assert np.var(tail, ddof=1) / np.var(pop.y, ddof=1) == pytest.approx(0.75, rel=1e-10)
    with pytest.raises(DomainError):
        synthetic_population(176, 16, rho=0.8, rho_y=0.5, ms_ratio=50.0, tail=0.25, seed=2)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(2, 6),
    k=st.integers(1, 6),
    data=st.data(),
)
def test_intraclass_bounds_and_oracle(n, k, data):
    N = n * k
    values = data.draw(
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=N, max_size=N).filter(
            lambda v: np.ptp(v) > 1e-3
        )
    )
    design = DesignParams.from_sizes(N, n)
    rho = intraclass_correlation(values, design)
    assert -1 / (n - 1) - 1e-12 <= rho <= 1 + 1e-12
    assert rho == pytest.approx(intraclass_bruteforce(values, k), rel=1e-9, abs=1e-9)
