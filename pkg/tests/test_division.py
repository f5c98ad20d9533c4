# tests/test_division.py
import pytest
from hypothesis import given, strategies as st

from conftest import check, model
from hybrid.lang.ast import walk
from hybrid.verify import REFUTED, VERIFIED, AbsVal, FuzzReport, Kind, analyze_division, join_envs, soundness_fuzz
from hybrid.verify.division import _Analyzer
from hybrid.verify.domain import env_le
from hybrid.verify.fuzz import check_program


def verdicts(checked):
    return {(v.var, v.site): (v.verdict, v.reason) for v in analyze_division(checked).verdicts}


# ============================================================
# CORPUS VERDICTS
# ============================================================

def test_branch_on_symbolic_bit_refutes_exact():
    report = analyze_division(model("outlier_exact_only"))
    (verdict,) = report.verdicts
    assert (verdict.var, verdict.site, verdict.verdict, verdict.reason) == ("x", 3, REFUTED, 5)
    assert str(verdict) == "x: Refuted at if(o)"
    assert verdict.line == 6


def test_sampling_the_bit_verifies_exact():
    assert verdicts(model("outlier_approx_exact")) == {("x", 1): (VERIFIED, None), ("x", 3): (VERIFIED, None)}


@pytest.mark.parametrize("name", ["kalman_exact", "branch_kalman", "outlier_approx_exact"])
def test_linear_gaussian_models_verify(name):
    report = analyze_division(model(name))
    assert report.verdicts
    assert report.all_verified


def test_observe_blocked_by_exact_bit():
    checked = check("function f(d) { for i in 1 .. 1 { o <- exact bernoulli(.5); x <- gaussian(o, 1.); observe(x, d[i]); } x }")
    assert verdicts(checked) == {("o", 2): (REFUTED, 4)}


def test_result_blocked_by_exact_bit():
    checked = check("function f() { o <- exact bernoulli(.5); x <- gaussian(o, 1.); x }")
    (verdict,) = analyze_division(checked).verdicts
    assert verdict.verdict == REFUTED
    assert verdict.reason is None
    assert str(verdict) == "o: Refuted at end of program"


def test_nonaffine_mean_refutes_its_inputs():
    checked = check("function f() { y <- exact gaussian(0., 1.); z <- exact gaussian(0., 1.); x <- gaussian(y * z, 1.); x }")
    assert {v.var: v.verdict for v in analyze_division(checked).verdicts} == {"y": REFUTED, "z": REFUTED}


def test_analysis_is_pure_and_deterministic():
    checked = model("outlier_exact_only")
    before = checked.program
    first, second = analyze_division(checked), analyze_division(checked)
    assert checked.program == before
    assert first.verdicts == second.verdicts
    assert first.may_sample == second.may_sample
    assert first.trace == second.trace


def test_program_without_exact_has_no_verdicts(outlier):
    report = analyze_division(outlier)
    assert report.verdicts == []
    assert report.may_sample == {4: 4}


# ============================================================
# LATTICE
# ============================================================

kinds = st.sampled_from([Kind.BOTTOM, Kind.LINGAUSS, Kind.DISCRETE, Kind.REALIZED, Kind.TOP])
site_sets = st.frozensets(st.integers(1, 6), max_size=4)


@st.composite
def abs_vals(draw):
    kind = draw(kinds)
    if kind is Kind.BOTTOM:
        return AbsVal()
    return AbsVal(kind, draw(site_sets), draw(site_sets))


@given(abs_vals(), abs_vals())
def test_join_is_an_upper_bound(a, b):
    j = a.join(b)
    assert a.le(j) and b.le(j)
    assert j == b.join(a)


@given(abs_vals())
def test_join_is_idempotent(a):
    assert a.join(a) == a


@given(abs_vals(), abs_vals())
def test_forced_sites_grow_with_the_value(a, b):
    j = a.join(b)
    assert a.forced() <= j.forced()
    assert a.blockers() <= j.blockers()


@given(st.dictionaries(st.sampled_from("xyz"), abs_vals()), st.dictionaries(st.sampled_from("xyz"), abs_vals()))
def test_env_join_is_pointwise(a, b):
    joined = join_envs(a, b)
    assert set(joined) == set(a) | set(b)
    for name, value in a.items():
        assert value.le(joined[name])


OUTLIER_EXACT = model("outlier_exact_only")
abs_envs = st.dictionaries(st.sampled_from(["x", "o", "y"]), abs_vals())


@given(abs_envs, abs_envs)
def test_transfer_functions_are_monotone(a, c):
    b = join_envs(a, c)
    for stmt in walk(OUTLIER_EXACT.program.body):
        low, high = _Analyzer(OUTLIER_EXACT), _Analyzer(OUTLIER_EXACT)
        out_low = low.block([stmt], dict(a))
        out_high = high.block([stmt], dict(b))
        assert env_le(out_low, out_high), stmt
        assert set(low.may_sample) <= set(high.may_sample), stmt


# ============================================================
# SOUNDNESS AGAINST THE RUNTIME
# ============================================================

def test_corpus_exact_annotations_are_precise():
    report = FuzzReport()
    for name in ["outlier_exact_only", "outlier_approx_exact", "kalman_exact", "branch_kalman"]:
        check_program(model(name), report, seeds=3, particles=8)
    assert report.failures == []
    assert report.precision == 1.0


def test_small_fuzz_finds_no_unsound_verdicts():
    report = soundness_fuzz(1, 20, seeds=3, particles=8)
    assert report.programs == 20
    assert report.failures == []


@pytest.mark.slow
def test_fuzz_soundness():
    report = soundness_fuzz(0, 500, seeds=20, particles=16)
    assert report.programs == 500
    assert report.failures == []
    assert report.empirically_exact >= report.verified_exact
