import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzypid.fuzzy import (
    INPUT_TERMS,
    OUTPUT_TERMS,
    FisGeometry,
    InputVariable,
    MembershipFn,
    NoRuleFired,
    OutputVariable,
    RuleTable,
    defuzz_centroid,
    default_fis,
    fuzzify,
    gains_from_error,
    infer,
    load_rule_tables,
    membership,
    parse_rule_tables,
)

TRI = MembershipFn(((-1, 0), (0, 1), (1, 0)))
FIS = default_fis()
# gains at (e, de) = (0, 0) for the default geometry: centroids of kp PS, ki PVS, kd PL
ZE_ZE_GOLDEN = (0.6000000000000001, 5.802002479338842, 0.39000000000000007)

# Expected rule tables, row = error term, column = error-rate term
KP_TABLE = """PVL PVL PVL PVL PVL
PML PML PML PL PVL
PVS PVS PS PMS PMS
PML PML PML PL PVL
PVL PVL PVL PVL PVL"""
KI_TABLE = """PM PM PM PM PM
PMS PMS PMS PMS PMS
PS PS PVS PS PS
PMS PMS PMS PMS PMS
PM PM PM PM PM"""
KD_TABLE = """PVS PMS PM PL PVL
PMS PML PL PVL PVL
PM PL PL PVL PVL
PML PVL PVL PVL PVL
PVL PVL PVL PVL PVL"""


def one_hot(term):
    v = np.zeros(5)
    v[INPUT_TERMS.index(term)] = 1.0
    return v


@pytest.mark.parametrize("x, mu", [(0, 1.0), (0.5, 0.5), (-0.25, 0.75), (2, 0.0), (-1, 0.0), (1, 0.0)])
def test_triangle_membership(x, mu):
    assert membership(TRI, x) == pytest.approx(mu)


def test_membership_fn_validation():
    with pytest.raises(ValueError):
        MembershipFn(((0, 1),))
    with pytest.raises(ValueError):
        MembershipFn(((0, 0), (0, 1)))
    with pytest.raises(ValueError):
        MembershipFn(((0, 0), (1, 1.5)))


def test_sample_matches_scalar():
    xs = np.linspace(-2, 2, 81)
    assert TRI.sample(xs).tolist() == pytest.approx([membership(TRI, x) for x in xs])


@pytest.mark.parametrize("var", [FIS.e_var, FIS.de_var], ids=["e", "de"])
def test_fuzzify_origin_is_zero_term(var):
    assert fuzzify(var, 0.0).tolist() == [0, 0, 1, 0, 0]


@pytest.mark.parametrize("var", [FIS.e_var, FIS.de_var], ids=["e", "de"])
def test_fuzzify_saturates_beyond_edges(var):
    big = 10 * max(abs(var.lo), abs(var.hi)) / var.scale
    assert fuzzify(var, big).tolist() == [0, 0, 0, 0, 1]
    assert fuzzify(var, -big).tolist() == [1, 0, 0, 0, 0]


@pytest.mark.parametrize("var", [FIS.e_var, FIS.de_var], ids=["e", "de"])
def test_fuzzify_ze_ps_crossover(var):
    # ZE falls from 1 at its peak to 0 at the PS peak while PS rises: they cross halfway
    ze, ps = var.peaks[2], var.peaks[3]
    x = 0.5 * (ze + ps) / var.scale
    assert fuzzify(var, x).tolist() == pytest.approx([0, 0, 0.5, 0.5, 0])


@pytest.mark.parametrize("var", [FIS.e_var, FIS.de_var], ids=["e", "de"])
def test_partition_of_unity_random_points(var):
    rng = np.random.default_rng(12345)
    for x in rng.uniform(var.lo, var.hi, 1000):
        deg = fuzzify(var, x / var.scale)
        assert abs(deg.sum() - 1.0) < 1e-9
        assert deg.max() > 0


def test_partition_violation_rejected():
    terms = list(FIS.e_var.terms)
    terms[2] = MembershipFn(((-100, 0), (0, 0.5), (100, 0)))
    with pytest.raises(ValueError, match="sum"):
        InputVariable("e", FIS.e_var.lo, FIS.e_var.hi, tuple(terms))


def test_shoulders_saturate_at_edges():
    for var in (FIS.e_var, FIS.de_var):
        assert membership(var.terms[0], var.lo) == 1.0
        assert membership(var.terms[-1], var.hi) == 1.0


def test_output_universes():
    assert (FIS.kp_out.max, FIS.ki_out.max, FIS.kd_out.max) == (30.0, 12.0, 1.0)
    for out in FIS.outputs:
        peaks = out.peaks
        assert all(b > a for a, b in zip(peaks, peaks[1:]))
        assert peaks[-1] == out.max


def test_output_variable_rejects_unordered_peaks():
    with pytest.raises(ValueError):
        OutputVariable.from_peaks("kp", [0, 10, 5, 15, 20, 25, 30])


def test_default_rule_tables_verbatim():
    tables = load_rule_tables()
    for name, text in (("kp", KP_TABLE), ("ki", KI_TABLE), ("kd", KD_TABLE)):
        expected = tuple(tuple(line.split()) for line in text.splitlines())
        assert tables[name].cells == expected


def test_rule_table_lookup():
    tables = load_rule_tables()
    assert tables["kp"]["ZE", "ZE"] == "PS"
    assert tables["ki"]["ZE", "ZE"] == "PVS"
    assert tables["kd"]["ZE", "ZE"] == "PL"
    assert tables["kp"]["NL", "NL"] == "PVL"
    assert tables["kp"]["PL", "ZE"] == "PVL"


def test_rows_symmetric_for_kp_and_ki_not_kd():
    t = load_rule_tables()
    for name in ("kp", "ki"):
        c = t[name].cells
        assert c[0] == c[4] and c[1] == c[3]
    c = t["kd"].cells
    assert c[0] != c[4] and c[1] != c[3]


@pytest.mark.parametrize("text, msg", [
    ("PVL PVL\n", "outside"),
    ("[kp]\nPVL PVL PVL\n", "expected 5"),
    ("[kp]\n" + "PVL PVL PVL PVL XX\n" * 5, "unknown output term"),
    ("[kp]\n" + "PVL PVL PVL PVL PVL\n" * 4, "5x5"),
    ("[kp]\n[kp]\n", "duplicate"),
])
def test_rule_parse_errors(text, msg):
    with pytest.raises(ValueError, match=msg):
        parse_rule_tables(text)


def test_rule_file_missing_table(tmp_path):
    p = tmp_path / "r.txt"
    p.write_text("[kp]\n" + "PVL PVL PVL PVL PVL\n" * 5)
    with pytest.raises(ValueError, match="missing"):
        load_rule_tables(p)


@pytest.mark.parametrize("rules, term", [("kp", "PS"), ("ki", "PVS"), ("kd", "PL")])
def test_infer_ze_ze(rules, term):
    act = infer(load_rule_tables()[rules], one_hot("ZE"), one_hot("ZE"))
    expected = np.zeros(7)
    expected[OUTPUT_TERMS.index(term)] = 1.0
    assert act.tolist() == expected.tolist()


def test_infer_zero_degrees():
    assert infer(load_rule_tables()["kp"], np.zeros(5), np.zeros(5)).tolist() == [0.0] * 7


def test_infer_min_max():
    e = np.array([0, 0, 0.3, 0.7, 0])
    de = np.array([0, 0, 0.6, 0.4, 0])
    act = infer(load_rule_tables()["kp"], e, de)
    # ZE/ZE -> PS: min(.3,.6); ZE/PS -> PMS: min(.3,.4); PS/ZE -> PML: min(.7,.6); PS/PS -> PL: min(.7,.4)
    want = dict(PS=0.3, PMS=0.3, PML=0.6, PL=0.4)
    assert act.tolist() == [want.get(t, 0.0) for t in OUTPUT_TERMS]


def test_centroid_of_symmetric_triangle():
    out = OutputVariable.uniform("kp", 30.0)
    act = np.zeros(7)
    act[3] = 1.0  # PM, symmetric triangle at 15
    assert defuzz_centroid(out, act) == pytest.approx(15.0, abs=1e-9)


def test_centroid_of_twin_triangles():
    out = OutputVariable.uniform("kp", 30.0)
    act = np.zeros(7)
    act[2] = act[4] = 0.6  # PMS at 10, PML at 20
    assert defuzz_centroid(out, act) == pytest.approx(15.0, abs=1e-9)


def test_centroid_pvl_only_upper_part():
    act = np.zeros(7)
    act[-1] = 1.0
    v = defuzz_centroid(FIS.kp_out, act)
    assert 15.0 < v <= 30.0


def test_no_rule_fired():
    with pytest.raises(NoRuleFired):
        defuzz_centroid(FIS.kp_out, np.zeros(7))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=7, max_size=7).filter(lambda a: max(a) > 0))
def test_centroid_inside_universe(act):
    for out in FIS.outputs:
        v = defuzz_centroid(out, act)
        assert 0.0 <= v <= out.max


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e5, 1e5), st.floats(-1e7, 1e7))
def test_gains_bounded(e, de):
    g = gains_from_error(FIS, e, de)
    assert 0 <= g.kp <= 30 and 0 <= g.ki <= 12 and 0 <= g.kd <= 1


def test_gains_reject_non_finite():
    with pytest.raises(ValueError):
        gains_from_error(FIS, float("nan"), 0.0)


def test_ze_ze_gains_are_single_term_centroids():
    g = gains_from_error(FIS, 0.0, 0.0)
    for value, out, term in zip((g.kp, g.ki, g.kd), FIS.outputs, ("PS", "PVS", "PL")):
        act = np.zeros(7)
        act[OUTPUT_TERMS.index(term)] = 1.0
        assert value == defuzz_centroid(out, act, FIS.defuzz_resolution)


def test_ze_ze_golden():
    g = gains_from_error(FIS, 0.0, 0.0)
    assert (g.kp, g.ki, g.kd) == pytest.approx(ZE_ZE_GOLDEN, abs=1e-12)


def test_saturated_negative_corner_gives_pvl_kp():
    g = gains_from_error(FIS, -1e9, -1e9)
    act = np.zeros(7)
    act[-1] = 1.0
    assert g.kp == defuzz_centroid(FIS.kp_out, act, FIS.defuzz_resolution)
    assert g.kp > max(FIS.kp_out.peaks[:-1])


def _probe_points(n=15):
    e = np.linspace(0, FIS.e_var.hi / FIS.e_var.scale, n)
    de = np.linspace(FIS.de_var.lo, FIS.de_var.hi, n) / FIS.de_var.scale
    return [(a, b) for a in e for b in de]


def test_kp_ki_mirror_symmetric_in_error():
    for e, de in _probe_points():
        a = gains_from_error(FIS, e, de)
        b = gains_from_error(FIS, -e, de)
        assert a.kp == pytest.approx(b.kp, abs=1e-12)
        assert a.ki == pytest.approx(b.ki, abs=1e-12)


def test_kd_not_mirror_symmetric():
    e = FIS.e_var.hi / FIS.e_var.scale
    de = FIS.de_var.lo / FIS.de_var.scale
    a = gains_from_error(FIS, e, de)
    b = gains_from_error(FIS, -e, de)
    assert abs(a.kd - b.kd) > 0.1


def test_resolution_doubling_is_stable():
    fine = FisGeometry.of(FIS)
    fine = FisGeometry(**{**fine.__dict__, "resolution": 2 * FIS.defuzz_resolution - 1})
    fis2 = fine.build()
    for e, de in _probe_points(9) + [(-x, y) for x, y in _probe_points(9)]:
        a = gains_from_error(FIS, e, de)
        b = gains_from_error(fis2, e, de)
        for va, vb, out in zip((a.kp, a.ki, a.kd), (b.kp, b.ki, b.kd), FIS.outputs):
            assert abs(va - vb) < 0.005 * out.max


def test_deterministic():
    a = [gains_from_error(FIS, e, de) for e, de in _probe_points(5)]
    b = [gains_from_error(FIS, e, de) for e, de in _probe_points(5)]
    assert a == b


def test_geometry_round_trip():
    geo = FisGeometry.of(FIS)
    assert geo.build() == FIS


def test_resolution_floor():
    with pytest.raises(ValueError):
        FisGeometry(resolution=100).build()


def test_constant_rule_table():
    t = RuleTable.constant("kp", "PM")
    assert all(cell == "PM" for row in t.cells for cell in row)
