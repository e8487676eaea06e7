import json

import click

import app
from commands import actions
from models import Ensemble

"""
    The toolkit is used by running this file from the terminal:
        python run.py [--env=<env>] <command> --model=<model> [options]
        <env> = production, development test, production test or dev (default is dev)
        <command> = check, convert, integrate, reduce, simulate or examples
    A model is a model file path or the name of a bundled model (python run.py examples lists them).
"""


def finish(result, as_json, text=None):
    check, message, code, report = result
    if as_json:
        click.echo(json.dumps(report, indent=2, default=str))
    else:
        if text is not None and check:
            click.echo(text)
        click.echo(message, err=not check)
    raise SystemExit(code)


@click.group()
@click.option('--env', default='dev')
def cli(env):
    if not app.initialize(env=env):
        raise SystemExit(actions.EXIT_USAGE)


@cli.command()
@click.option('--model', required=True)
@click.option('--field', multiple=True, help='Vector field to verify; repeat for several.')
@click.option('--force', is_flag=True, help='Analyse W-fields rejected by the conformal gate.')
@click.option('--strict', is_flag=True)
@click.option('--json', 'as_json', is_flag=True)
def check(model, field, force, strict, as_json):
    finish(actions.cmd_check(model, field, force, strict), as_json)


@cli.command()
@click.option('--model', required=True)
@click.option('--json', 'as_json', is_flag=True)
def convert(model, as_json):
    result = actions.cmd_convert(model)
    finish(result, as_json, result[3].get('model_file'))


@cli.command()
@click.option('--model', required=True)
@click.option('--field')
@click.option('--cov')
@click.option('--simulate', is_flag=True, help='Cross-check the solution against Euler-Maruyama.')
@click.option('--seed', type=int)
@click.option('--dt', type=float)
@click.option('--paths', type=int)
@click.option('--horizon', type=float)
@click.option('--strict', is_flag=True)
@click.option('--json', 'as_json', is_flag=True)
def integrate(model, field, cov, simulate, seed, dt, paths, horizon, strict, as_json):
    finish(actions.cmd_integrate(model, field, cov, simulate, seed, dt, paths, horizon, strict), as_json)


@cli.command()
@click.option('--model', required=True)
@click.option('--field', multiple=True, required=True, help='Generators in reduction order.')
@click.option('--cov', multiple=True, required=True, help='One change of variables per generator.')
@click.option('--json', 'as_json', is_flag=True)
def reduce(model, field, cov, as_json):
    finish(actions.cmd_reduce(model, field, cov), as_json)


@cli.command()
@click.option('--model', required=True)
@click.option('--seed', type=int)
@click.option('--dt', type=float)
@click.option('--paths', type=int)
@click.option('--horizon', type=float)
@click.option('--field', help='Symmetry whose finite map is tested on the solutions.')
@click.option('--s', 's', type=float, help='Group parameter of the finite map.')
@click.option('--csv-out', type=click.Path(dir_okay=False, writable=True))
@click.option('--scheme', type=click.Choice([Ensemble.EULER_MARUYAMA, Ensemble.HEUN]))
@click.option('--strict', is_flag=True)
@click.option('--json', 'as_json', is_flag=True)
def simulate(model, seed, dt, paths, horizon, field, s, csv_out, scheme, strict, as_json):
    finish(actions.cmd_simulate(model, seed, dt, paths, horizon, field, s, csv_out, strict, scheme), as_json)


@cli.command()
@click.option('--only', multiple=True, help='Bundled model to check; repeat for several.')
@click.option('--simulate/--no-simulate', default=True)
@click.option('--paths', type=int)
@click.option('--strict', is_flag=True)
@click.option('--json', 'as_json', is_flag=True)
def examples(only, simulate, paths, strict, as_json):
    result = actions.cmd_examples(only, strict, simulate, paths)
    if not as_json and 'results' in result[3]:
        for row in result[3]['results']:
            click.echo('%-12s %-52s %s' % (row['example'], row['check'], row['status'].upper()))
    finish(result, as_json)


def main():
    try:
        cli.main(standalone_mode=False)
    except click.ClickException as error:
        error.show()
        raise SystemExit(actions.EXIT_USAGE)
    except click.Abort:
        raise SystemExit(actions.EXIT_USAGE)


if __name__ == '__main__':
    main()
