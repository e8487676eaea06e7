import pytest

import app
from expressions.actions import is_identically_zero
from expressions.nodes import add, neg
from expressions.parser import parse
from model_manager import model_manager
from models import StratSystem
from . import actions, regression

NOT_A_SYMMETRY = """
[system]
n = 1
m = 1
type = ito
f1 = x
sigma_1_1 = 1
x0_1 = 1.0

[vectorfield.P]
phi1 = 1
"""


def same(text, expected, ctx):
    return is_identically_zero(add(parse(text, ctx), neg(parse(expected, ctx))), ctx).is_zero


########################################################################################################################
# Run configuration
########################################################################################################################

def test_run_config_precedence():
    model = model_manager.load('example2')
    config = actions.run_config('simulate', model, seed=5)
    assert config.seed == 5
    assert config.horizon == 0.5
    assert config.paths == app.config['MC_PATHS']
    assert config.tolerance['zero_test_points'] == app.config['ZERO_TEST_POINTS']


def test_reports_carry_model_digest_and_run():
    check, _, code, report = actions.cmd_check('example1', ['X'])
    assert check and code == actions.EXIT_SUCCESS
    assert len(report['model']['digest']) == 64
    assert report['run']['command'] == 'check'
    assert report['run']['seed'] == app.config['MC_SEED']


########################################################################################################################
# check
########################################################################################################################

@pytest.mark.parametrize("model, field, kind, expected",
                         [
                             ('example1', 'X', 'standard', 'Symmetry'),
                             ('example2', 'X', 'standard', 'Symmetry'),
                             ('example2', 'T', 'standard', 'Rejected'),
                             ('example3', 'D', 'stratonovich', 'Symmetry'),
                             ('example4', 'X', 'ito', 'Symmetry'),
                             ('example4', 'X', 'stratonovich', 'NotSymmetry'),
                             ('example6', 'X1', 'ito', 'Symmetry'),
                             ('example6', 'X2', 'ito', 'Rejected'),
                             ('example11', 'Xsquare', 'ito', 'Symmetry'),
                             ('appendixB', 'B2', 'ito', 'NotSymmetry'),
                         ]
                         )
def test_cmd_check(model, field, kind, expected):
    check, _, code, report = actions.cmd_check(model, [field])
    assert check and code == actions.EXIT_SUCCESS
    assert report['fields'][field]['verdicts'][kind] == expected


def test_cmd_check_rejection_carries_the_reason():
    _, _, _, report = actions.cmd_check('example6', ['X2'])
    assert 'not a multiple of the identity' in report['fields']['X2']['ito']['reason']


def test_cmd_check_forced_analysis_of_rejected_field():
    _, _, code, report = actions.cmd_check('example6', ['X2'], force=True)
    assert code == actions.EXIT_SUCCESS
    assert report['fields']['X2']['verdicts']['ito'] != 'Rejected'


def test_cmd_check_reports_calculus_agreement():
    _, _, _, report = actions.cmd_check('example4', ['X'])
    assert report['fields']['X']['theorem1']['agreement'] == 'broken'


def test_cmd_check_random_symmetry_compatibility():
    _, _, _, report = actions.cmd_check('example2', ['X'])
    assert report['fields']['X']['compatibility']['compatible'] is False


def test_cmd_check_without_fields_only_classifies():
    check, message, code, report = actions.cmd_check('example7')
    assert check and code == actions.EXIT_SUCCESS
    assert list(report['fields']) == ['X1', 'X2', 'X3', 'X4']
    assert all('verdicts' not in entry for entry in report['fields'].values())
    assert report['fields']['X2']['classification']['admissible'] is False
    assert message == 'Classified 4 fields.'


def test_cmd_check_witness_of_non_symmetry():
    _, _, _, report = actions.cmd_check('appendixB', ['B1'])
    assert report['fields']['B1']['ito']['witness'] is not None


@pytest.mark.parametrize("model, fields, text",
                         [
                             ('example1', ['Y'], "no vector field 'Y'"),
                             ('example99', [], 'example99'),
                         ]
                         )
def test_cmd_check_usage_errors(model, fields, text):
    check, message, code, report = actions.cmd_check(model, fields)
    assert not check
    assert code == actions.EXIT_USAGE
    assert text in message
    assert report['error'] == message


########################################################################################################################
# convert
########################################################################################################################

def test_cmd_convert_constant_noise():
    check, _, code, report = actions.cmd_convert('example3')
    assert check and code == actions.EXIT_SUCCESS
    ctx = model_manager.load('example3').ctx
    assert same(report['correction']['rho'][0], '0', ctx)
    converted = model_manager.loads(report['model_file'], 'converted')
    assert isinstance(converted.system, StratSystem)
    assert is_identically_zero(add(converted.system.b[0], neg(parse('lambda*x', ctx))), ctx).is_zero
    assert list(converted.fields) == ['D']


def test_cmd_convert_geometric_brownian_motion():
    _, message, _, report = actions.cmd_convert('geometric')
    ctx = model_manager.load('geometric').ctx
    assert same(report['correction']['rho'][0], '(1/2)*mu^2*x', ctx)
    assert message == 'Converted geometric to the Stratonovich form.'


def test_cmd_convert_stratonovich_model():
    _, message, _, report = actions.cmd_convert('example12')
    converted = model_manager.loads(report['model_file'])
    assert message.endswith('to the Ito form.')
    assert not isinstance(converted.system, StratSystem)


########################################################################################################################
# integrate
########################################################################################################################

def test_cmd_integrate_example1():
    check, _, code, report = actions.cmd_integrate('example1', 'X')
    assert check and code == actions.EXIT_SUCCESS
    ctx = model_manager.load('example1').ctx
    assert same(report['solution']['F'], '1', ctx)
    assert same(report['solution']['S'][0], '1', ctx)
    assert report['transformed']['ito_like']['status'] == 'Ito'


def test_cmd_integrate_example2_with_model_coordinates():
    check, message, code, report = actions.cmd_integrate('example2', 'X', cov='kozlov')
    assert check and code == actions.EXIT_SUCCESS
    assert 'not of Ito type' in message
    assert report['change_of_variables']['name'] == 'kozlov'


def test_cmd_integrate_cross_check():
    check, _, code, report = actions.cmd_integrate('example1', simulate=True, paths=2000, dt=0.01)
    assert check and code == actions.EXIT_SUCCESS
    assert report['validation']['verdict'] == 'Pass'
    assert report['run']['paths'] == 2000


def test_cmd_integrate_rejects_non_symmetries(tmp_path):
    path = tmp_path / 'shifted.ini'
    path.write_text(NOT_A_SYMMETRY)
    check, _, code, report = actions.cmd_integrate(str(path), 'P')
    assert not check
    assert code == actions.EXIT_FAILURE
    assert report['verification']['verdicts']['standard'] == 'NotSymmetry'


def test_cmd_integrate_needs_a_scalar_equation():
    check, _, code, _ = actions.cmd_integrate('example7')
    assert not check
    assert code == actions.EXIT_USAGE


########################################################################################################################
# reduce
########################################################################################################################

def test_cmd_reduce_single_field():
    check, message, code, report = actions.cmd_reduce('example1', ['X'], ['kozlov'])
    assert check and code == actions.EXIT_SUCCESS
    assert report['chain']['completed']
    assert message == 'Reduced example1 in 1 steps.'


def test_cmd_reduce_example7_stops_after_first_step():
    check, message, code, report = actions.cmd_reduce('example7', ['X1', 'X4'], ['scaling', 'rotation'])
    assert check and code == actions.EXIT_SUCCESS
    assert not report['chain']['completed']
    assert len(report['chain']['steps']) == 1
    assert report['solvability']['abelian']
    assert 'not of Ito type' in message


def test_cmd_reduce_rotation():
    _, _, code, report = actions.cmd_reduce('example8', ['XRot'], ['polar'])
    assert code == actions.EXIT_SUCCESS
    assert report['chain']['steps'][0]['rectified_along'] == 3


def test_cmd_reduce_non_solvable_algebra():
    check, _, code, report = actions.cmd_reduce('example7', ['X1', 'X2', 'X3', 'X4'],
                                                ['scaling', 'rotation', 'scaling', 'rotation'], )
    assert not check
    assert code == actions.EXIT_FAILURE
    assert report['solvability']['status'] == 'NotSolvable'


def test_cmd_reduce_needs_one_cov_per_field():
    _, _, code, _ = actions.cmd_reduce('example7', ['X1', 'X4'], ['scaling'])
    assert code == actions.EXIT_USAGE


########################################################################################################################
# simulate
########################################################################################################################

def test_cmd_simulate_writes_statistics(tmp_path):
    path = tmp_path / 'linear.csv'
    check, _, code, report = actions.cmd_simulate('linear', paths=2000, dt=0.01, s=0.0, csv_out=str(path))
    assert check and code == actions.EXIT_SUCCESS
    assert report['statistics']['n_effective'] == 2000
    assert report['validation']['verdict'] == 'Pass'
    lines = path.read_text().splitlines()
    assert lines[0] == 't,mean_1,var_1,se_1'
    assert len(lines) == 102


def test_cmd_simulate_exact_symmetry_map():
    check, _, code, report = actions.cmd_simulate('example11', paths=500, dt=0.01)
    assert check and code == actions.EXIT_SUCCESS
    assert report['validation']['verdict'] == 'Pass'
    assert report['validation']['mean_difference_se'] < 1e-6


def test_cmd_simulate_heun_scheme():
    _, _, code, report = actions.cmd_simulate('geometric', paths=500, dt=0.01, scheme='Heun')
    assert code == actions.EXIT_SUCCESS
    assert report['statistics']['parameters']['scheme'] == 'Heun'
    assert 'validation' not in report


def test_cmd_simulate_needs_an_initial_value():
    check, message, code, _ = actions.cmd_simulate('example8', paths=10)
    assert not check
    assert code == actions.EXIT_USAGE
    assert 'x0' in message


########################################################################################################################
# examples
########################################################################################################################

def test_cmd_examples_single_model():
    check, _, code, report = actions.cmd_examples(['example4'], simulate=False)
    assert check and code == actions.EXIT_SUCCESS
    assert {row['example'] for row in report['results']} == {'example4'}
    assert all(row['status'] == regression.PASSED for row in report['results'])


def test_cmd_examples_unknown_model():
    check, message, code, _ = actions.cmd_examples(['example99'])
    assert not check
    assert code == actions.EXIT_USAGE
    assert 'example99' in message


def test_cmd_examples_symbolic_suite():
    check, message, code, report = actions.cmd_examples(simulate=False)
    failed = [row for row in report['results'] if row['status'] != regression.PASSED]
    assert failed == []
    assert check and code == actions.EXIT_SUCCESS
    assert {'example1', 'example7', 'example12', 'appendixB'} <= {row['example'] for row in report['results']}


def test_failed_rows_set_the_exit_code(monkeypatch):
    def failing(only, simulate, paths):
        return [regression.row('example1', 'forced', 'a', 'b', False)]

    monkeypatch.setattr(regression, 'run_suite', failing)
    check, _, code, _ = actions.cmd_examples()
    assert not check
    assert code == actions.EXIT_FAILURE


def test_inconclusive_rows_with_strict(monkeypatch):
    def inconclusive(only, simulate, paths):
        return [regression.row('example1', 'forced', 'a', 'b', None)]

    monkeypatch.setattr(regression, 'run_suite', inconclusive)
    assert actions.cmd_examples()[2] == actions.EXIT_SUCCESS
    assert actions.cmd_examples(strict=True)[2] == actions.EXIT_INCONCLUSIVE


@pytest.mark.slow
def test_cmd_examples_monte_carlo_suite():
    check, message, code, report = actions.cmd_examples(paths=100000)
    failed = [row for row in report['results'] if row['status'] != regression.PASSED]
    assert failed == []
    assert code == actions.EXIT_SUCCESS
