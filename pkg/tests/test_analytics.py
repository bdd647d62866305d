import csv
import io
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dnapool import analytics
from dnapool.analytics import CostModelParams, sb_for_method, sd_for_method
from dnapool.errors import CapacityExceeded, NegativeCapacity

REF = CostModelParams(n=5, s_d=100000, r_c=Fraction(34, 100), s_h=10, s_t=2010, l_s=220, l_p=20,
                        a=Fraction(5, 8))


def test_compression_ratio():
    assert analytics.compression_ratio(170, 500) == Fraction(34, 100)
    assert analytics.compression_ratio(500, 500) == 1
    assert analytics.compression_ratio(0, 500) == 0
    with pytest.raises(ZeroDivisionError):
        analytics.compression_ratio(1, 0)


def test_compression_efficiency_example():
    s_o = analytics.parse_size("500MB")
    s_t = analytics.parse_size("201KB")
    e = analytics.compression_efficiency(Fraction(34, 100), s_o, s_t)
    assert e == 1 - Fraction(34, 100) - Fraction(201, 512000)
    assert abs(float(e) - 0.65961) < 1e-5


def test_compression_efficiency_edges():
    assert analytics.compression_efficiency(Fraction(1, 4), 1000, 0) == Fraction(3, 4)
    assert analytics.compression_efficiency(Fraction(1, 4), 1000, 750) == 0
    with pytest.raises(ZeroDivisionError):
        analytics.compression_efficiency(1, 0, 0)


def test_parse_size_units():
    assert analytics.parse_size("1KB") == 1024
    assert analytics.parse_size("1KB", "decimal") == 1000
    assert analytics.parse_size("2MB") == 2 * 1024 ** 2
    assert analytics.parse_size("17") == 17


def test_sb_reference_point():
    assert sb_for_method("1-1cs", REF) == 180100
    assert sb_for_method("m-1ci", REF) == 172260
    assert sb_for_method("1-mci", REF) == 172060


def test_sb_coincide_at_one_file():
    p = REF.with_(n=1)
    assert sb_for_method("1-1cs", p) == sb_for_method("1-mci", p)


def test_sd_eq4_example():
    # Sb = 125 bytes = 1000 bits
    p = CostModelParams(n=1, s_d=115, r_c=1, s_h=10, s_t=0, l_s=220, l_p=20, a=Fraction(5, 8))
    assert sb_for_method("1-1cs", p) == 125
    sd = sd_for_method("1-1cs", p)
    assert sd == 1000 * Fraction(5, 8) * (1 + Fraction(40, 180))
    assert float(sd) == pytest.approx(763.89, abs=0.01)


def test_sd_eq6_terms():
    p = REF
    a8 = 8 * p.a
    data = 170000 + 50
    expected = a8 * 172060 + a8 * data * Fraction(40, 220) + a8 * 2010 * Fraction(120, 100)
    assert sd_for_method("1-mci", p) == expected
    corrected = a8 * 172060 + a8 * data * Fraction(40, 180) + a8 * 2010 * Fraction(120, 100)
    assert sd_for_method("1-mci", p, "corrected") == corrected


def test_negative_capacity():
    with pytest.raises(NegativeCapacity):
        sd_for_method("1-1cs", REF.with_(l_s=40))
    with pytest.raises(NegativeCapacity):
        sd_for_method("1-mci", REF.with_(l_s=120))


def test_1mci_bound():
    with pytest.raises(CapacityExceeded):
        sb_for_method("1-mci", REF.with_(n=11))
    sb_for_method("1-mci", REF.with_(n=10))


def test_params_validation():
    with pytest.raises(ValueError):
        CostModelParams(n=1, r_c=Fraction(3, 2))
    with pytest.raises(ValueError):
        CostModelParams(n=1, a=0)
    with pytest.raises(ValueError):
        CostModelParams(n=2, s_d=(1, 2, 3)).sizes


def test_pool_geometry_reduces_to_closed_form():
    p = REF.with_(index_len=0, payload_quantum=1)
    assert sd_for_method("m-1ci", p) == sd_for_method("m-1ci", REF)
    q = REF.with_(index_len=19, payload_quantum=4)
    assert analytics.data_fragment_factor(q) == 1 + Fraction(59, 160)


def test_storage_density():
    assert analytics.storage_density(1, 4) == 2
    assert analytics.storage_density(16, 81) == Fraction(128, 81)
    with pytest.raises(ZeroDivisionError):
        analytics.storage_density(1, 0)


params = st.builds(
    CostModelParams,
    n=st.integers(2, 7),
    s_d=st.integers(1, 10**7),
    r_c=st.fractions(0, 1, max_denominator=1000),
    s_h=st.integers(0, 64),
    s_t=st.integers(0, 10**6),
    l_s=st.integers(200, 400),
    l_p=st.integers(15, 25),
    a=st.sampled_from([Fraction(1, 2), Fraction(5, 8), Fraction(81, 128)]),
)


@given(params)
def test_sb_difference_is_duplicate_tools(p):
    assert sb_for_method("1-1cs", p) - sb_for_method("1-mci", p) == (p.n - 1) * p.s_t


@given(params)
def test_sb_ordering(p):
    assert sb_for_method("1-mci", p) < sb_for_method("m-1ci", p)
    # n * S_T > n * 2 L_p + S_T, i.e. the pointers must cost less than the duplicate tools
    assert (sb_for_method("m-1ci", p) < sb_for_method("1-1cs", p)) == (
        p.s_t * (p.n - 1) > 2 * p.l_p * p.n)


def test_sb_ordering_needs_more_than_two_primers_at_small_n():
    p = CostModelParams(n=2, s_d=1, r_c=0, s_h=0, s_t=31, l_s=200, l_p=15)
    assert p.s_t > 2 * p.l_p
    assert sb_for_method("m-1ci", p) > sb_for_method("1-1cs", p)


@given(st.fractions(0, 1), st.integers(1, 10**9), st.integers(0, 10**9))
def test_breakeven_identity(r_c, s_o, s_t):
    e = analytics.compression_efficiency(r_c, s_o, s_t)
    assert (e <= 0) == (s_t >= (1 - r_c) * s_o)


def test_sweep_n_csv():
    rows = analytics.sweep(analytics.REFERENCE_PARAMS, "n", range(1, 11))
    text = analytics.to_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0] == ["param", "method", "sb_bytes", "sd_bases", "e_c", "d"]
    assert len(parsed) == 1 + 10 * 4
    assert {r[1] for r in parsed[1:]} == {"1-1cs", "m-1ci", "1-mci", "1-mci:corrected"}
    assert text == analytics.to_csv(analytics.sweep(analytics.REFERENCE_PARAMS, "n", range(1, 11)))
    slope = {m: analytics.series(rows, m)[1] - analytics.series(rows, m)[0]
             for m in ("1-1cs", "m-1ci", "1-mci")}
    assert slope["1-1cs"] == max(slope.values())


def test_sweep_ratio_decreasing():
    rows = analytics.sweep(analytics.REFERENCE_PARAMS.with_(n=3), "ratio", range(5, 21))
    for m in ("1-1cs", "m-1ci", "1-mci", "1-mci:corrected"):
        sd = analytics.series(rows, m)
        assert all(a > b for a, b in zip(sd, sd[1:]))


def test_sweep_s_o_approaches_ideal():
    base = CostModelParams(n=1, r_c=Fraction(34, 100), s_t=analytics.parse_size("201KB"), s_h=0)
    sizes = [analytics.parse_size(f"{k}MB") for k in (1, 10, 100, 1000, 10000)]
    rows = analytics.sweep(base, "s_o", sizes)
    e = analytics.series(rows, "1-mci", "e_c")
    assert all(x < y for x, y in zip(e, e[1:]))
    assert Fraction(66, 100) - e[-1] < Fraction(1, 10**4)


def test_sweep_rejects_empty_and_unknown():
    with pytest.raises(ValueError):
        analytics.sweep(REF, "n", [])
    with pytest.raises(ValueError):
        analytics.sweep(REF, "colour", [1])


def test_sweep_propagates_capacity():
    with pytest.raises((CapacityExceeded, NegativeCapacity)):
        analytics.sweep(REF, "n", [11])


class _Stats:
    def __init__(self, bases, method="1-1cs", n=1, ls=220):
        self.total_bases, self.method, self.n_data_files, self.ls = bases, method, n, ls


def test_audit_zero_and_mismatch():
    a = analytics.audit_pool(_Stats(0, n=0), [])
    assert a.deviation == 0 and not a.flagged
    p = CostModelParams(n=1, s_d=1000, r_c=1, s_h=10, s_t=0, has_tool=False)
    exact = sd_for_method("1-1cs", p)
    assert not analytics.audit_pool(_Stats(int(exact)), [p]).flagged
    wrong = analytics.audit_pool(_Stats(int(exact)), [REF], method="1-mci")
    assert wrong.method_mismatch and wrong.flagged
