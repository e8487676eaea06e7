from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from expressions.actions import is_identically_zero
from expressions.nodes import Context, add, neg, state
from expressions.parser import parse
from models import (AdmissibilityError, ItoSystem, SolvabilityReport, StratSystem, Theorem1Report, Verdict,
                    VectorField)
from systems.actions import ito_to_strat
from . import actions, algebra, factory


def ito(ctx, f, sigma):
    return ItoSystem(ctx, [parse(e, ctx) for e in f], [[parse(e, ctx) for e in row] for row in sigma])


def field(ctx, phi, R=None, h=None, tau='0', name=None):
    return VectorField([parse(e, ctx) for e in phi], parse(tau, ctx),
                       h=None if h is None else [parse(e, ctx) for e in h], R=R, name=name)


def same(a, b, ctx):
    if isinstance(b, str):
        b = parse(b, ctx)
    return is_identically_zero(add(a, neg(b)), ctx).is_zero


def _entries(values):
    return [e for row in values for e in (row if isinstance(row, (list, tuple)) else [row])]


EXAMPLE1 = Context(aliases={'y': state(1)})
EXAMPLE3 = Context(params={'lambda': 0.8, 'mu': 0.6})
EXAMPLE4 = Context(params={'lambda': 0.8, 'mu': 0.6, 'alpha': 1.7})
PLANE = Context(n=2, m=2, params={'lambda': 0.5, 'mu': 1.2})


def example1():
    return ito(EXAMPLE1, ['exp(-y) - (1/2)*exp(-2*y)'], [['exp(-y)']])


def example3():
    return ito(EXAMPLE3, ['lambda*x'], [['mu']])


def example4():
    return ito(EXAMPLE4, ['lambda*x'], [['mu*x^alpha']])


def isotropic_oscillator():
    return ito(PLANE, ['lambda*x1', 'lambda*x2'], [['mu', '0'], ['0', 'mu']])


def nonlinear_oscillator():
    return ito(PLANE, ['(1 - x1^2 - x2^2)*x1', '(1 - x1^2 - x2^2)*x2'],
               [['mu*(x1^2 + x2^2)', '0'], ['0', 'mu*(x1^2 + x2^2)']])


def example7_generators():
    return [field(PLANE, ['x1', 'x2'], R=[[1, 0], [0, 1]], name='X1'),
            field(PLANE, ['x1', '-x2'], R=[[1, 0], [0, -1]], name='X2'),
            field(PLANE, ['x2', 'x1'], R=[[0, 1], [1, 0]], name='X3'),
            field(PLANE, ['x2', '-x1'], R=[[0, 1], [-1, 0]], name='X4')]


def rotation():
    return field(PLANE, ['-x2', 'x1'], R=[[0, -1], [1, 0]], name='XRot')


########################################################################################################################
# Classification and conformal gate
########################################################################################################################

def test_classify_deterministic_simple():
    result = actions.classify(field(EXAMPLE1, ['exp(-y)']), example1())
    assert result.simple and result.admissible
    assert not result.random and not result.w_acting
    assert result.labels() == ['simple', 'deterministic']


def test_classify_random_simple():
    ctx = Context()
    sys = ito(ctx, ['exp(x)'], [['1']])
    result = actions.classify(field(ctx, ['exp(x - w)']), sys)
    assert result.simple and result.random and result.admissible


def test_classify_time_translation_is_not_simple():
    ctx = Context()
    sys = ito(ctx, ['exp(x)'], [['1']])
    result = actions.classify(field(ctx, ['0'], tau='1'), sys)
    assert result.acting_on_time
    assert not result.simple


def test_classify_rejects_state_dependent_tau():
    result = actions.classify(field(EXAMPLE3, ['x'], tau='x'), example3())
    assert not result.admissible
    assert 'tau must depend on t only.' in result.reasons


def test_classify_general_h():
    ctx = PLANE
    sys = isotropic_oscillator()
    assert actions.classify(field(ctx, ['x1', 'x2'], h=['w1', 'w2']), sys).admissible
    rejected = actions.classify(field(ctx, ['x1', '-x2'], h=['w1', '-w2']), sys)
    assert rejected.w_acting and not rejected.admissible
    nonlinear = actions.classify(field(ctx, ['x1', 'x2'], h=['w1^2', 'w2']), sys)
    assert not nonlinear.admissible


@pytest.mark.parametrize('R, admissible, dilation', [
    ([[1, 0], [0, 1]], True, 1.0),
    ([[1, 0], [0, -1]], False, None),
    ([[0, -1], [1, 0]], True, 0.0),
    ([[0, 1], [1, 0]], False, None),
    ([[2, 3], [-3, 2]], True, 2.0),
    ([[-0.7]], True, -0.7),
])
def test_conformal_check(R, admissible, dilation):
    result = actions.conformal_check(R)
    assert result.admissible == admissible
    if admissible:
        assert result.dilation == pytest.approx(dilation)
    else:
        assert result.reason


@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=-3, max_value=3),
       st.floats(min_value=-3, max_value=3), st.floats(min_value=-3, max_value=3))
def test_conformal_check_accepts_dilation_plus_rotation(scale, a, b, c):
    R = [[scale, a, b], [-a, scale, c], [-b, -c, scale]]
    result = actions.conformal_check(R)
    assert result.admissible
    assert result.dilation == pytest.approx(scale)
    assert result.skew[0][1] == pytest.approx(a)


########################################################################################################################
# Standard symmetries
########################################################################################################################

def test_example1_standard_symmetry():
    report = actions.residual_standard_ito(field(EXAMPLE1, ['exp(-y)']), example1())
    assert report.verdict.status == Verdict.SYMMETRY
    assert all(v.is_zero for v in report.zero_verdicts['drift'])


def test_example2_random_symmetry():
    ctx = Context()
    report = actions.residual_standard_ito(field(ctx, ['exp(x - w)']), ito(ctx, ['exp(x)'], [['1']]))
    assert report.verdict.holds


def test_standard_non_symmetry_has_witness():
    report = actions.residual_standard_ito(field(EXAMPLE3, ['1']), example3())
    assert report.verdict.status == Verdict.NOT_SYMMETRY
    assert report.verdicts['diffusion'].holds
    assert actions.witness_of(report) is not None


def test_standard_residuals_reject_w_fields():
    with pytest.raises(AdmissibilityError):
        actions.residual_standard_ito(field(EXAMPLE3, ['x'], R=[[1]]), example3())
    with pytest.raises(AdmissibilityError):
        actions.residual_standard_ito(field(EXAMPLE3, ['x'], tau='t'), example3())


########################################################################################################################
# W-symmetries
########################################################################################################################

def test_example3_scaling_in_both_calculi():
    X = field(EXAMPLE3, ['x'], R=[[1]])
    assert actions.residual_W_ito(X, example3()).verdict.holds
    assert actions.residual_W_strat(X, example3()).verdict.holds


def test_example3_general_h():
    X = field(EXAMPLE3, ['x'], h=['w'])
    assert actions.residual_W_ito(X, example3()).verdict.holds
    assert actions.residual_W_strat(X, example3()).verdict.holds


def test_example4_breaks_in_stratonovich():
    X = field(EXAMPLE4, ['x'], R=[[parse('1 - alpha', EXAMPLE4)]])
    assert actions.residual_W_ito(X, example4()).verdict.holds
    strat = actions.residual_W_strat(X, example4())
    assert strat.verdict.status == Verdict.NOT_SYMMETRY
    assert strat.verdicts['diffusion'].holds
    assert same(strat.residuals['drift'][0], 'alpha*(alpha - 1)*mu^2*x^(2*alpha - 1)', EXAMPLE4)


def test_example5_nonlinear_w_symmetry():
    ctx = Context()
    sys = ito(ctx, ['x^2 + x^2*(x*exp(2/x) - 2*Ei(2/x))'], [['x^2*exp(1/x)']])
    X = field(ctx, ['x^2'], R=[[1]])
    assert actions.residual_W_ito(X, sys).verdict.holds
    assert actions.residual_W_strat(X, sys).verdict.status == Verdict.NOT_SYMMETRY


def test_example6_conformal_gate():
    ctx = Context(n=2, m=2, params={'l1': 0.5, 'l2': -0.3, 'm1': 1.1, 'm2': 0.7})
    sys = ito(ctx, ['l1*x1', 'l2*x2'], [['m1', '0'], ['0', 'm2']])
    X1 = field(ctx, ['x1', 'x2'], R=[[1, 0], [0, 1]])
    X2 = field(ctx, ['x1', '-x2'], R=[[1, 0], [0, -1]])
    assert actions.residual_W_ito(X1, sys).verdict.holds
    with pytest.raises(AdmissibilityError):
        actions.residual_W_ito(X2, sys)
    forced = actions.residual_W_ito(X2, sys, force=True)
    assert forced.verdict.holds
    assert forced.notes
    assert actions.residual_W_strat(X2, sys, force=True).verdict.holds


def test_example6_rotation_needs_isotropy():
    ctx = Context(n=2, m=2, params={'l1': 0.5, 'l2': -0.3, 'm1': 1.1, 'm2': 0.7})
    sys = ito(ctx, ['l1*x1', 'l2*x2'], [['m1', '0'], ['0', 'm2']])
    X = field(ctx, ['x2', '-x1'], R=[[0, 1], [-1, 0]])
    assert actions.residual_W_ito(X, sys).verdict.status == Verdict.NOT_SYMMETRY


@pytest.mark.parametrize('index', [0, 1, 2, 3])
def test_example7_generators_are_symmetries(index):
    X = example7_generators()[index]
    sys = isotropic_oscillator()
    assert actions.residual_W_ito(X, sys, force=True).verdict.holds
    assert actions.residual_W_strat(X, sys, force=True).verdict.holds


def test_example7_acceptable_generators():
    sys = isotropic_oscillator()
    accepted = [actions.classify(X, sys).admissible for X in example7_generators()]
    assert accepted == [True, False, False, True]


def test_example8_rotation_in_both_calculi():
    sys = nonlinear_oscillator()
    assert actions.residual_W_ito(rotation(), sys).verdict.holds
    assert actions.residual_W_strat(rotation(), sys).verdict.holds
    scaling = field(PLANE, ['x1', 'x2'], R=[[1, 0], [0, 1]])
    assert actions.residual_W_ito(scaling, sys).verdict.status == Verdict.NOT_SYMMETRY


def test_example10_rotation_invariant_family():
    sys = ito(PLANE, ['-(x1^2 + x2^2)*x1', '-(x1^2 + x2^2)*x2'],
              [['1 + x1^2 + x2^2', '-(x1^2 + x2^2)'], ['x1^2 + x2^2', '1 + x1^2 + x2^2']])
    assert actions.residual_W_ito(rotation(), sys).verdict.holds
    assert actions.residual_W_strat(rotation(), sys).verdict.holds


def test_example11_non_split_symmetry():
    ctx = Context(params={'A': 0.4, 'B': 1.5})
    sys = ito(ctx, ['A'], [['B']])
    assert actions.residual_W_ito(field(ctx, ['B*w'], R=[[1]]), sys).verdict.holds
    family = field(ctx, ['x - A*t + sin(w - x/B + A*t/B)'], R=[[1]])
    assert actions.residual_W_ito(family, sys).verdict.holds
    shear = field(ctx, ['B*w'], h=['1'])
    assert actions.residual_W_ito(shear, sys).verdict.status == Verdict.NOT_SYMMETRY


def test_example12_stratonovich_scaling():
    ctx = EXAMPLE3
    sys = StratSystem(ctx, [parse('lambda*x', ctx)], [[parse('mu', ctx)]])
    assert actions.residual_W_strat(field(ctx, ['x'], R=[[1]]), sys).verdict.holds


@pytest.mark.parametrize('phi', ['x*exp(w)', 'x*w^2'])
def test_forbidden_forms_are_not_symmetries(phi):
    for R in ([[1]], [[-2]], [[0.5]]):
        report = actions.residual_W_ito(field(EXAMPLE3, [phi], R=R), example3())
        assert report.verdict.status == Verdict.NOT_SYMMETRY


def test_general_h_agrees_with_linear_declaration():
    ctx = Context(n=2, m=2, params={'K': 0.9, 's': 0.4})
    sys = ito(ctx, ['-K*x1', '-K*x2'], [['s', '0'], ['0', 's']])
    for X in (field(ctx, ['x1', 'x2'], R=[[1, 0], [0, 1]]), field(ctx, ['x2', '-x1'], R=[[0, 1], [-1, 0]])):
        assert actions.general_linear_consistency(X, sys).holds
        assert actions.residual_W_ito(X, sys).verdict.holds


########################################################################################################################
# Ito versus Stratonovich
########################################################################################################################

def test_sigma_operator_scalar():
    ctx = Context()
    sys = ito(ctx, ['0'], [['x^2']])
    assert same(actions.sigma_operator([parse('x^2', ctx)], sys)[0], '2*x^4', ctx)


def test_calR_scalar():
    calr = actions.calR_term(example4().sigma, [[parse('1', EXAMPLE4)]], EXAMPLE4)
    assert same(calr[0], '2*alpha*mu^2*x^(2*alpha - 1)', EXAMPLE4)


def test_sdil_check():
    assert actions.sdil_check(example3().sigma, [[1]], EXAMPLE3).holds
    assert not actions.sdil_check(example4().sigma, [[1]], EXAMPLE4).holds
    assert actions.sdil_check(nonlinear_oscillator().sigma, [[0, -1], [1, 0]], PLANE).holds


@pytest.mark.parametrize('build, X, agreement', [
    (example3, lambda: field(EXAMPLE3, ['x'], R=[[1]]), Theorem1Report.GUARANTEED),
    (example4, lambda: field(EXAMPLE4, ['x'], R=[[parse('1 - alpha', EXAMPLE4)]]), Theorem1Report.BROKEN),
    (nonlinear_oscillator, rotation, Theorem1Report.GUARANTEED),
])
def test_theorem1_analysis(build, X, agreement):
    report = actions.theorem1_analysis(X(), build())
    assert report.agreement == agreement
    assert all(v.is_zero for v in report.discrepancy_matches)


@pytest.mark.parametrize('build, ctx, phi', [
    (example1, EXAMPLE1, ['exp(-y)']),
    (example3, EXAMPLE3, ['x']),
    (example4, EXAMPLE4, ['x^2']),
    (nonlinear_oscillator, PLANE, ['-x2', 'x1']),
])
def test_zero_R_reduces_to_standard_residuals(build, ctx, phi):
    sys = build()
    zero = [[0] * ctx.m for _ in range(ctx.m)]
    w_report = actions.residual_W_ito(field(ctx, phi, R=zero), sys, force=True)
    standard = actions.residual_standard_ito(field(ctx, phi), sys)
    assert w_report.verdict.status == standard.verdict.status
    for family in ('drift', 'diffusion'):
        pairs = zip(_entries(w_report.residuals[family]), _entries(standard.residuals[family]))
        assert all(same(a, b, ctx) for a, b in pairs)


def test_theorem1_analysis_with_numeric_entries():
    ctx = Context(params={'lambda': 0.8, 'mu': 0.6, 'alpha': 2})
    report = actions.theorem1_analysis(VectorField([state(1)], R=[[-1]]), ito(ctx, ['lambda*x'], [['mu*x^alpha']]))
    assert report.agreement == Theorem1Report.BROKEN
    assert all(v.is_zero for v in report.discrepancy_matches)


def test_theorem1_analysis_needs_linear_w():
    with pytest.raises(AdmissibilityError):
        actions.theorem1_analysis(field(EXAMPLE3, ['x'], h=['w']), example3())


@settings(max_examples=50)
@given(st.integers(min_value=-2, max_value=2), st.integers(min_value=1, max_value=3),
       st.integers(min_value=0, max_value=3), st.integers(min_value=-3, max_value=3),
       st.integers(min_value=-2, max_value=2))
def test_scalar_discrepancy_is_sigma_sigma_x_R(a, b, k, R, c):
    ctx = Context()
    sigma = parse('%d + %d*x^%d' % (a, b, k), ctx)
    sys = ItoSystem(ctx, [parse('x', ctx)], [[sigma]])
    # phi = sigma (R w + c) solves the diffusion family for any sigma
    phi = parse('(%d + %d*x^%d)*(%d*w + %d)' % (a, b, k, R, c), ctx)
    discrepancy = factory.theorem1_discrepancy([phi], sys)[0]
    calr = factory.calR_term(sys.sigma, [[parse(str(R), ctx)]], ctx)[0]
    assert same(discrepancy, calr * factory.HALF, ctx)
    assert same(calr * factory.HALF, '(%d + %d*x^%d)*%d*x^%d*%d' % (a, b, k, b * k, max(k - 1, 0), R)
                if k > 0 else '0', ctx)


@settings(max_examples=50)
@given(st.floats(min_value=0.2, max_value=2.0), st.integers(min_value=-2, max_value=2))
def test_scalar_agreement_is_guaranteed_only_without_dilation_or_gradient(mu, R):
    ctx = Context(params={'mu': mu})
    X = field(ctx, ['x'], R=[[R]])
    constant = actions.theorem1_analysis(X, ito(ctx, ['x'], [['mu']]), force=True)
    assert constant.agreement == Theorem1Report.GUARANTEED
    linear = actions.theorem1_analysis(X, ito(ctx, ['x'], [['mu*x']]), force=True)
    assert (linear.agreement == Theorem1Report.GUARANTEED) == (R == 0)


########################################################################################################################
# Lie algebra
########################################################################################################################

def test_example7_commutator_table():
    X1, X2, X3, X4 = example7_generators()
    expected = {
        (X2, X3): algebra.combination([X4], [-2], PLANE),
        (X2, X4): algebra.combination([X3], [-2], PLANE),
        (X3, X4): algebra.combination([X2], [2], PLANE),
    }
    for (X, Y), target in expected.items():
        bracket = algebra.lie_bracket(X, Y, PLANE)
        for a, b in zip(bracket.phi, target.phi):
            assert same(a, b, PLANE)
        for row_a, row_b in zip(bracket.R, target.R):
            for a, b in zip(row_a, row_b):
                assert same(a, b, PLANE)
    for Y in (X2, X3, X4):
        bracket = algebra.lie_bracket(X1, Y, PLANE)
        assert all(same(e, '0', PLANE) for e in bracket.phi)


def test_bracket_is_antisymmetric_and_satisfies_jacobi():
    _, X2, X3, X4 = example7_generators()
    forward = algebra.lie_bracket(X2, X3, PLANE)
    backward = algebra.lie_bracket(X3, X2, PLANE)
    assert all(same(a, neg(b), PLANE) for a, b in zip(forward.phi, backward.phi))
    terms = [algebra.lie_bracket(X2, algebra.lie_bracket(X3, X4, PLANE), PLANE),
             algebra.lie_bracket(X3, algebra.lie_bracket(X4, X2, PLANE), PLANE),
             algebra.lie_bracket(X4, algebra.lie_bracket(X2, X3, PLANE), PLANE)]
    total = algebra.combination(terms, [1, 1, 1], PLANE)
    assert all(same(e, '0', PLANE) for e in total.phi)
    assert all(same(e, '0', PLANE) for row in total.R for e in row)


def test_bracket_rejects_mixed_fields():
    X1 = example7_generators()[0]
    with pytest.raises(AdmissibilityError):
        algebra.lie_bracket(X1, field(PLANE, ['1', '0']), PLANE)
    with pytest.raises(AdmissibilityError):
        algebra.lie_bracket(X1, field(PLANE, ['x1', 'x2'], h=['w1', 'w2']), PLANE)


def test_example7_acceptable_pair_is_abelian():
    X1, _, _, X4 = example7_generators()
    report = algebra.solvability_check([X1, X4], PLANE)
    assert report.status == SolvabilityReport.SOLVABLE
    assert report.abelian
    assert report.derived_dimensions == [2, 0]
    assert report.ordering == ['X1', 'X4']


def test_example7_full_algebra_is_not_solvable():
    report = algebra.solvability_check(example7_generators(), PLANE)
    assert report.status == SolvabilityReport.NOT_SOLVABLE
    assert report.derived_dimensions == [4, 3]
    assert report.structure_constants[1][2] == '-2*X4'
    assert report.structure_constants[1][3] == '-2*X3'
    assert report.structure_constants[2][3] == '2*X2'
    assert report.structure_constants[2][1] == '2*X4'
    assert report.structure_constants[0][3] == '0'


def test_affine_algebra_ordering():
    ctx = Context()
    translation = field(ctx, ['1'], name='P')
    dilation = field(ctx, ['x'], name='D')
    report = algebra.solvability_check([dilation, translation], ctx)
    assert report.status == SolvabilityReport.SOLVABLE
    assert report.derived_dimensions == [2, 1, 0]
    assert report.structure_constants[0][1] == '-P'
    assert report.ordering == ['P', 'D']


def test_ordering_coefficients_round_noise_to_zero():
    assert algebra._exact_coefficients([1e-17, 0.5, -2.0]) == [Fraction(0), Fraction(1, 2), Fraction(-2)]


def test_solvability_rejects_dependent_generators():
    ctx = Context()
    report = algebra.solvability_check([field(ctx, ['x'], name='A'), field(ctx, ['2*x'], name='B')], ctx)
    assert report.status == SolvabilityReport.INCONCLUSIVE


def test_solvability_detects_brackets_outside_the_span():
    ctx = Context()
    report = algebra.solvability_check([field(ctx, ['1'], name='P'), field(ctx, ['x^2'], name='K')], ctx)
    assert report.status == SolvabilityReport.INCONCLUSIVE
    assert 'not in the span' in report.reason


def test_strat_residuals_of_ito_system_use_associated_drift():
    X = field(EXAMPLE4, ['x'], R=[[parse('1 - alpha', EXAMPLE4)]])
    direct = factory.w_strat_residuals(X, ito_to_strat(example4()))
    assert same(direct['drift'][0], actions.residual_W_strat(X, example4()).residuals['drift'][0], EXAMPLE4)
