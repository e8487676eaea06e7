import configparser
import hashlib
import io
import os
import re

import jsonschema
import natsort
import yaml

import app
from expressions.nodes import Context, ExpressionError, as_expression, is_const, state, wiener, to_text
from expressions.parser import parse
from kozlov import templates
from models import ChangeOfVariables, ItoSystem, Model, ModelError, StratSystem, VectorField


class ModelFileError(ModelError):
    def __init__(self, message, path=None, section=None, key=None):
        self.path = path
        self.section = section
        self.key = key
        location = ''
        if path is not None:
            location += os.path.basename(path)
        if section is not None:
            location += ' [%s]' % section
        if key is not None:
            location += ' %s' % key
        super().__init__('%s: %s' % (location.strip(), message) if location else message)


EXPRESSION = {'type': ['string', 'number']}
MATRIX = {'type': 'array', 'items': {'type': 'array', 'items': EXPRESSION}}
INTERVAL = {'type': 'array', 'items': {'type': 'number'}, 'minItems': 2, 'maxItems': 2}
VERDICT = {'enum': ['Symmetry', 'NotSymmetry', 'Inconclusive', 'Rejected']}

FIELD_SCHEMA = {
    'type': 'object',
    'properties': {
        'tau': EXPRESSION,
        'R': {'anyOf': [MATRIX, EXPRESSION]},
        'expect_ito': VERDICT,
        'expect_strat': VERDICT,
        'expect_standard': VERDICT,
        'description': {'type': 'string'}
    },
    'patternProperties': {
        '^phi[0-9]+$': EXPRESSION,
        '^h[0-9]+$': EXPRESSION
    },
    'additionalProperties': False
}

COV_SCHEMA = {
    'type': 'object',
    'properties': {
        'direction': {'enum': [ChangeOfVariables.OLD_TO_NEW, ChangeOfVariables.NEW_TO_OLD]},
        'template': {'enum': ['scaling', 'rotation']},
        'names': {'type': 'array', 'items': {'type': 'string'}},
        'R': {'anyOf': [MATRIX, EXPRESSION]},
        'description': {'type': 'string'}
    },
    'patternProperties': {
        '^phi[0-9]+$': EXPRESSION,
        '^inverse[0-9]+$': EXPRESSION,
        '^omega[0-9]+$': EXPRESSION,
        '^coordinate[0-9]+$': EXPRESSION
    },
    'additionalProperties': False
}

MODEL_SCHEMA = {
    'type': 'object',
    'required': ['system'],
    'properties': {
        'system': {
            'type': 'object',
            'required': ['n', 'm', 'type'],
            'properties': {
                'n': {'type': 'integer', 'minimum': 1},
                'm': {'type': 'integer', 'minimum': 1},
                'type': {'enum': ['ito', 'stratonovich']},
                'state': {'type': 'string'},
                'wiener': {'type': 'string'},
                'description': {'type': 'string'}
            },
            'patternProperties': {
                '^[fb][0-9]+$': EXPRESSION,
                '^sigma_[0-9]+_[0-9]+$': EXPRESSION,
                '^x0_[0-9]+$': {'type': 'number'}
            },
            'additionalProperties': False
        },
        'params': {
            'type': 'object',
            'additionalProperties': {'anyOf': [{'type': 'number'}, {'enum': ['symbolic']}]}
        },
        'sampling': {
            'type': 'object',
            'properties': {'state': INTERVAL, 'wiener': INTERVAL, 'time': INTERVAL, 'param': INTERVAL},
            'additionalProperties': False
        },
        'simulation': {
            'type': 'object',
            'properties': {
                'x0': {'anyOf': [{'type': 'number'}, {'type': 'array', 'items': {'type': 'number'}}]},
                't0': {'type': 'number'},
                'horizon': {'type': 'number', 'exclusiveMinimum': 0},
                'dt': {'type': 'number', 'exclusiveMinimum': 0},
                'paths': {'type': 'integer', 'minimum': 1},
                'seed': {'type': 'integer', 'minimum': 0},
                'field': {'type': 'string'},
                's': {'type': 'number'}
            },
            'additionalProperties': False
        },
        'vectorfields': {'type': 'object', 'additionalProperties': FIELD_SCHEMA},
        'changeofvars': {'type': 'object', 'additionalProperties': COV_SCHEMA}
    },
    'additionalProperties': False
}

_INDEXED = re.compile(r'^([a-z]+?)([0-9]+)$')


class ModelManager:
    """
        Reads model files and the bundled model corpus:
        - Parsing the INI document and its YAML values.
        - Validating the document against the model schema.
        - Building the system, fields and changes of variables.
    """

    def directory(self):
        return os.path.join(app.root_path, app.config['MODELS_DIRECTORY'])

    def bundled(self):
        """
            Names of the bundled models in natural order (example2 before example10).
        """
        directory = self.directory()
        if not os.path.isdir(directory):
            return []
        return natsort.natsorted(file[:-4] for file in os.listdir(directory) if file.endswith('.ini'))

    def resolve(self, model):
        """
            The path of a model given either as a file path or as a bundled model name.

            *Raises:*
                - *ModelFileError*: If neither exists.
        """
        if os.path.isfile(model):
            return model
        path = os.path.join(self.directory(), model + '.ini')
        if os.path.isfile(path):
            return path
        raise ModelFileError("No model file or bundled model named '%s'." % model)

    def document(self, text, path=None):
        """
            Parses the INI text into a dictionary and validates it.

            *Parameters:*
                - *text (str)*: The model file contents.
                - *path (str)*: The file path, for error messages.

            *Returns:*
                - *dict*: The document with 'vectorfield.NAME' and 'changeofvars.NAME' sections
                  grouped under 'vectorfields' and 'changeofvars'.

            *Raises:*
                - *ModelFileError*: On INI, YAML or schema errors.
        """
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text, source=path or '<model>')
        except configparser.Error as error:
            raise ModelFileError(str(error).replace('\n', ' '), path)

        document = {}
        for section in parser.sections():
            values = {}
            for key, raw in parser.items(section):
                try:
                    values[key] = yaml.safe_load(raw)
                except yaml.YAMLError as error:
                    raise ModelFileError('Unreadable value %r (%s).' % (raw, error.__class__.__name__), path,
                                         section, key)
            kind, _, name = section.partition('.')
            if name and kind in ('vectorfield', 'changeofvars'):
                group = 'vectorfields' if kind == 'vectorfield' else 'changeofvars'
                document.setdefault(group, {})[name] = values
            else:
                document[section] = values
        try:
            jsonschema.validate(document, MODEL_SCHEMA)
        except jsonschema.ValidationError as error:
            where = '/'.join(str(part) for part in error.absolute_path)
            raise ModelFileError('%s (at %s).' % (error.message, where or 'top level'), path)
        return document

    def load(self, model):
        """
            Loads a model.

            *Parameters:*
                - *model (str)*: A model file path or a bundled model name.

            *Returns:*
                - *Model*: The parsed model, with the sha256 digest of the file.

            *Raises:*
                - *ModelFileError*: On a missing file, a malformed document or an expression that
                  does not parse (with the section, key and position).
        """
        path = self.resolve(model)
        with open(path, 'rb') as file:
            content = file.read()
        return self.build(self.document(content.decode('utf-8'), path), os.path.splitext(os.path.basename(path))[0],
                          path, hashlib.sha256(content).hexdigest())

    def loads(self, text, name='model'):
        return self.build(self.document(text), name, None, hashlib.sha256(text.encode('utf-8')).hexdigest())

    def dumps(self, model, system=None):
        """
            Writes a model back in the model file format, optionally with another system of the
            same dimensions (a converted calculus). Changes of variables are not written.

            *Returns:*
                - *str*: The INI text.
        """
        system = model.system if system is None else system
        ctx = model.ctx
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        section = {'n': str(ctx.n), 'm': str(ctx.m)}
        if model.description:
            section['description'] = model.description
        if isinstance(system, ItoSystem):
            section['type'] = 'ito'
            section.update({'f%d' % (i + 1): to_text(e) for i, e in enumerate(system.f)})
        else:
            section['type'] = 'stratonovich'
            section.update({'b%d' % (i + 1): to_text(e) for i, e in enumerate(system.b)})
        for i, row in enumerate(system.sigma):
            for k, entry in enumerate(row):
                if not is_const(entry, 0):
                    section['sigma_%d_%d' % (i + 1, k + 1)] = to_text(entry)
        parser['system'] = section
        if ctx.params:
            parser['params'] = {key: 'symbolic' if value is None else repr(value) for key, value in ctx.params.items()}
        if ctx.box:
            parser['sampling'] = {key: '[%r, %r]' % tuple(value) for key, value in ctx.box.items()}
        for name, X in model.fields.items():
            values = {'phi%d' % (i + 1): to_text(e) for i, e in enumerate(X.phi)}
            if not is_const(X.tau, 0):
                values['tau'] = to_text(X.tau)
            if X.R is not None:
                rows = ('[%s]' % ', '.join(to_text(as_expression(e)) for e in row) for row in X.R)
                values['R'] = '[%s]' % ', '.join(rows)
            if X.h is not None:
                values.update({'h%d' % (k + 1): to_text(e) for k, e in enumerate(X.h)})
            for kind, key in (('ito', 'expect_ito'), ('stratonovich', 'expect_strat'), ('standard', 'expect_standard')):
                if kind in model.expectations.get(name, {}):
                    values[key] = model.expectations[name][kind]
            parser['vectorfield.' + name] = values
        if model.simulation:
            parser['simulation'] = {key: str(value) for key, value in model.simulation.items()}
        output = io.StringIO()
        parser.write(output)
        return output.getvalue()

    def build(self, document, name, path=None, digest=None):
        system_section = document['system']
        n, m = system_section['n'], system_section['m']
        params = {key: None if value == 'symbolic' else float(value)
                  for key, value in document.get('params', {}).items()}
        aliases = {}
        if 'state' in system_section:
            if n != 1:
                raise ModelFileError('A state alias needs a scalar system.', path, 'system', 'state')
            aliases[system_section['state']] = state(1)
        if 'wiener' in system_section:
            if m != 1:
                raise ModelFileError('A Wiener alias needs a single Wiener process.', path, 'system', 'wiener')
            aliases[system_section['wiener']] = wiener(1)
        ctx = Context(n=n, m=m, params=params, aliases=aliases, box=dict(document.get('sampling', {})))

        builder = _Builder(ctx, path)
        drift_key = 'f' if system_section['type'] == 'ito' else 'b'
        drift = builder.vector(system_section, 'system', drift_key, n)
        sigma = [[builder.expression(system_section.get('sigma_%d_%d' % (i, k), 0), 'system',
                                     'sigma_%d_%d' % (i, k)) for k in range(1, m + 1)] for i in range(1, n + 1)]
        _check_system_keys(system_section, drift_key, path)
        try:
            if system_section['type'] == 'ito':
                system = ItoSystem(ctx, drift, sigma)
            else:
                system = StratSystem(ctx, drift, sigma)
        except ModelError as error:
            raise ModelFileError(str(error), path, 'system')

        fields = {}
        expectations = {}
        for field_name, values in document.get('vectorfields', {}).items():
            fields[field_name] = builder.field(field_name, values)
            expectations[field_name] = {kind: values[key] for kind, key in
                                        (('ito', 'expect_ito'), ('stratonovich', 'expect_strat'),
                                         ('standard', 'expect_standard')) if key in values}
        covs = {cov_name: builder.cov(cov_name, values)
                for cov_name, values in document.get('changeofvars', {}).items()}

        simulation = dict(document.get('simulation', {}))
        if 'x0' not in simulation and any('x0_%d' % i in system_section for i in range(1, n + 1)):
            simulation['x0'] = [float(system_section.get('x0_%d' % i, 0.0)) for i in range(1, n + 1)]
        if 'field' in simulation and simulation['field'] not in fields:
            raise ModelFileError("Unknown vector field '%s'." % simulation['field'], path, 'simulation', 'field')
        return Model({
            'name': name,
            'path': path,
            'digest': digest,
            'description': system_section.get('description'),
            'ctx': ctx,
            'system': system,
            'fields': fields,
            'expectations': expectations,
            'covs': covs,
            'simulation': simulation
        })


def _check_system_keys(values, drift_key, path):
    n, m = values['n'], values['m']
    for key in values:
        match = re.match(r'^(f|b|x0_)([0-9]+)$', key)
        if match is not None:
            if match.group(1) in ('f', 'b') and match.group(1) != drift_key:
                raise ModelFileError("'%s' does not belong to a %s system." % (key, values['type']), path,
                                     'system', key)
            if not 1 <= int(match.group(2)) <= n:
                raise ModelFileError('Index outside the declared dimensions.', path, 'system', key)
        match = re.match(r'^sigma_([0-9]+)_([0-9]+)$', key)
        if match is not None and not (1 <= int(match.group(1)) <= n and 1 <= int(match.group(2)) <= m):
            raise ModelFileError('Index outside the declared dimensions.', path, 'system', key)


class _Builder:
    def __init__(self, ctx, path):
        self.ctx = ctx
        self.path = path

    def expression(self, value, section, key, ctx=None):
        if not isinstance(value, str):
            return as_expression(value)
        try:
            return parse(value, ctx or self.ctx)
        except ExpressionError as error:
            raise ModelFileError(str(error), self.path, section, key)

    def vector(self, values, section, prefix, size, ctx=None, required=True):
        if not required and not any('%s%d' % (prefix, i) in values for i in range(1, size + 1)):
            return None
        missing = [('%s%d' % (prefix, i)) for i in range(1, size + 1) if '%s%d' % (prefix, i) not in values]
        if missing:
            raise ModelFileError('Missing %s.' % ', '.join(missing), self.path, section)
        return [self.expression(values['%s%d' % (prefix, i)], section, '%s%d' % (prefix, i), ctx)
                for i in range(1, size + 1)]

    def matrix(self, value, section, key, size):
        if not isinstance(value, list):
            value = [[value]]
        if len(value) != size or any(len(row) != size for row in value):
            raise ModelFileError('R must be %dx%d.' % (size, size), self.path, section, key)
        return [[self.expression(entry, section, key) for entry in row] for row in value]

    def check_indices(self, values, section, bounds):
        for key in values:
            match = _INDEXED.match(key)
            if match is None:
                continue
            prefix, index = match.group(1), int(match.group(2))
            bound = bounds.get(prefix, bounds.get(prefix + '_'))
            if bound is not None and not 1 <= index <= bound:
                raise ModelFileError('Index outside the declared dimensions.', self.path, section, key)

    def field(self, name, values):
        section = 'vectorfield.' + name
        n, m = self.ctx.n, self.ctx.m
        self.check_indices(values, section, {'phi': n, 'h': m})
        phi = self.vector(values, section, 'phi', n)
        tau = self.expression(values.get('tau', 0), section, 'tau')
        h = self.vector(values, section, 'h', m, required=False)
        R = self.matrix(values['R'], section, 'R', m) if 'R' in values else None
        try:
            return VectorField(phi, tau, h=h, R=R, name=name)
        except ModelError as error:
            raise ModelFileError(str(error), self.path, section)

    def new_context(self, names, section):
        n, m = self.ctx.n, self.ctx.m
        if len(names) != n + m:
            raise ModelFileError('names needs %d entries (states, then Wiener variables).' % (n + m),
                                 self.path, section, 'names')
        aliases = {name: state(i + 1) for i, name in enumerate(names[:n])}
        aliases.update({name: wiener(k + 1) for k, name in enumerate(names[n:])})
        return Context(n=n, m=m, params=dict(self.ctx.params), aliases=aliases, box=dict(self.ctx.box))

    def cov(self, name, values):
        section = 'changeofvars.' + name
        n, m = self.ctx.n, self.ctx.m
        if 'template' in values:
            if values['template'] == 'scaling':
                cov = templates.scaling(n, m)
            elif n == 2 and m == 2:
                cov = templates.rotation()
            else:
                raise ModelFileError('The rotation template needs n = m = 2.', self.path, section, 'template')
            cov.name = name
            return cov
        if 'direction' not in values:
            raise ModelFileError('Missing direction (or template).', self.path, section)
        self.check_indices(values, section, {'phi': n, 'inverse': n, 'omega': m, 'coordinate': n + m})
        direction = values['direction']
        new_ctx = self.new_context(values['names'], section) if 'names' in values else self.ctx
        try:
            if direction == ChangeOfVariables.OLD_TO_NEW:
                return ChangeOfVariables(direction, self.vector(values, section, 'phi', n),
                                         inverse=self.vector(values, section, 'inverse', n, new_ctx, required=False),
                                         new_ctx=new_ctx, name=name)
            R = self.matrix(values['R'], section, 'R', m) if 'R' in values else None
            return ChangeOfVariables(direction, self.vector(values, section, 'phi', n, new_ctx), R=R,
                                     omega=self.vector(values, section, 'omega', m, new_ctx, required=False),
                                     new_ctx=new_ctx, name=name,
                                     coordinates=self.vector(values, section, 'coordinate', n + m, required=False))
        except ModelError as error:
            raise ModelFileError(str(error), self.path, section)


model_manager = ModelManager()
