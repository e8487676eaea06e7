from kozlov.actions import bcomp_check
from models import AdmissibilityError, DimensionError, StratSystem, TransformationError, VectorField
from symmetries.actions import (classify, residual_W_ito, residual_W_strat, residual_standard_ito, theorem1_analysis,
                                witness_of)
from systems.actions import as_ito

REJECTED = 'Rejected'


def _rejected(error):
    return {'verdict': {'status': REJECTED}, 'reason': str(error)}


def _summary(report):
    json = report.to_json()
    json['witness'] = witness_of(report)
    return json


def classification_entry(X, sys):
    return {'field': X.to_json(), 'classification': classify(X, sys).to_json()}


def standard_entry(X, sys):
    """
        Standard determining equations of a field without noise part, with the compatibility
        relation of random symmetries for scalar systems.
    """
    entry = {}
    try:
        report = residual_standard_ito(X, sys)
    except AdmissibilityError as error:
        entry['standard'] = _rejected(error)
        return entry, REJECTED
    entry['standard'] = _summary(report)
    if report.verdict.holds and sys.ctx.n == 1 and sys.ctx.m == 1:
        try:
            entry['compatibility'] = bcomp_check(sys, X).to_json()
        except (TransformationError, DimensionError) as error:
            entry['compatibility'] = {'compatible': None, 'reason': str(error)}
    return entry, report.verdict.status


def w_entry(X, ito, strat, force):
    """
        W-symmetry determining equations in both calculi, and the comparison of the two for
        a linear W part.
    """
    entry = {}
    verdicts = {}
    if X.noise == VectorField.LINEAR:
        try:
            analysis = theorem1_analysis(X, ito, force)
        except AdmissibilityError as error:
            entry['ito'] = entry['stratonovich'] = _rejected(error)
            return entry, {'ito': REJECTED, 'stratonovich': REJECTED}
        entry['ito'] = _summary(analysis.ito)
        entry['stratonovich'] = _summary(analysis.stratonovich)
        entry['theorem1'] = {'agreement': analysis.agreement, 'reason': analysis.reason,
                             'calr': analysis.to_json()['calr'],
                             'discrepancy_matches': [v.status for v in analysis.discrepancy_matches]}
        return entry, {'ito': analysis.ito.verdict.status, 'stratonovich': analysis.stratonovich.verdict.status}
    for kind, build, sys in (('ito', residual_W_ito, ito), ('stratonovich', residual_W_strat, strat)):
        try:
            report = build(X, sys, force)
        except AdmissibilityError as error:
            entry[kind] = _rejected(error)
            verdicts[kind] = REJECTED
            continue
        entry[kind] = _summary(report)
        verdicts[kind] = report.verdict.status
    return entry, verdicts


def analyse_field(X, sys, force=False):
    """
        Classification and determining-equation verdicts of one candidate.

        *Parameters:*
            - *X (VectorField)*: The candidate.
            - *sys (ItoSystem or StratSystem)*: The system of the model.
            - *force (bool)*: Analyse W-fields whose R fails the conformal gate.

        *Returns:*
            - *dict*: The field, its classification, one report per calculus and a 'verdicts'
              summary keyed 'standard', 'ito' and 'stratonovich'. Rejected candidates carry the
              reason instead of a report.

        *Raises:*
            - *DimensionError*: If the field does not match the system.
    """
    entry = classification_entry(X, sys)
    ito = as_ito(sys)
    strat = sys if isinstance(sys, StratSystem) else ito
    if X.noise == VectorField.NONE:
        reports, verdict = standard_entry(X, ito)
        entry.update(reports)
        entry['verdicts'] = {'standard': verdict}
    else:
        reports, verdicts = w_entry(X, ito, strat, force)
        entry.update(reports)
        entry['verdicts'] = verdicts
    return entry
