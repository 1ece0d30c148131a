"""Command-line front end for the experiment harness.

Examples are registry names (`npi registry` lists them) or paths to JSON
config files; command-line flags override file values. Reports go to
stdout unless --out is given.
"""

import sys

import click

import npi
from . import harness, registry


def _common(fn):
    fn = click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
                      default="json", show_default=True,
                      help="Report serialization.")(fn)
    fn = click.option("--out", type=click.Path(dir_okay=False), default=None,
                      help="Write the report to this path instead of stdout.")(fn)
    fn = click.option("--no-timestamp", is_flag=True,
                      help="Omit time stamps so identical runs are byte-identical.")(fn)
    return fn


def _emit(subcommand, example, out, fmt, **kwargs):
    code, text = harness.run(subcommand, example, out=out, fmt=fmt, **kwargs)
    if out is None:
        click.echo(text, nl=False)
    else:
        click.echo(f"{subcommand} {example}: exit {code}, report at {out}")
    sys.exit(code)


@click.group()
@click.version_option(version=npi.__version__, prog_name="npi")
def main():
    """Nonlocal inequality experiments: verify, bound, and sweep."""


@main.command("registry")
def registry_cmd():
    """List the registered example names."""
    for name in registry.names():
        click.echo(name)


@main.command()
@click.argument("example")
@click.option("--grid", type=int, default=None, help="Cells across the core region.")
@click.option("--trials", type=int, default=None, help="Random test functions.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--p", type=float, default=None, help="Override the exponent.")
@_common
def verify(example, grid, trials, seed, p, out, fmt, no_timestamp):
    """Check the inequality on randomly generated admissible fields."""
    _emit("verify", example, out, fmt, grid=grid, trials=trials, seed=seed,
          p=p, no_timestamp=no_timestamp)


@main.command()
@click.argument("example")
@click.option("--grid", type=int, default=None, help="Cells across the core region.")
@click.option("--p", type=float, default=None, help="Override the exponent.")
@_common
def sharp(example, grid, p, out, fmt, no_timestamp):
    """Sharp discrete p = 2 constant versus the certified bound."""
    _emit("sharp", example, out, fmt, grid=grid, p=p, no_timestamp=no_timestamp)


@main.command()
@click.argument("example")
@click.option("--grid", type=int, default=None,
              help="Parameter-set grid resolution (default 64).")
@click.option("--trials", type=int, default=None, help="Start points sampled.")
@click.option("--seed", type=int, default=0, show_default=True)
@_common
def absorption(example, grid, trials, seed, out, fmt, no_timestamp):
    """Partition the parameter set by worst-case absorption index."""
    _emit("absorption", example, out, fmt, grid=grid, trials=trials,
          seed=seed, no_timestamp=no_timestamp)


@main.command()
@click.argument("example")
@_common
def jensen(example, out, fmt, no_timestamp):
    """Verify the example's declared reverse-Jensen weight condition."""
    _emit("jensen", example, out, fmt, no_timestamp=no_timestamp)


@main.command()
@click.argument("example")
@click.option("--nu", type=float, default=None,
              help="Contraction constant for the control pseudo-example.")
@click.option("--p", type=float, default=None, help="Exponent.")
@_common
def constants(example, nu, p, out, fmt, no_timestamp):
    """Evaluate a certified bound with its factor breakdown."""
    _emit("constants", example, out, fmt, nu=nu, p=p,
          no_timestamp=no_timestamp)


@main.command()
@click.argument("example")
@click.option("--grid", type=int, default=None, help="Base rung of the ladder.")
@click.option("--trials", type=int, default=None, help="Test functions per rung.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--p", type=float, default=None, help="Override the exponent.")
@_common
def sweep(example, grid, trials, seed, p, out, fmt, no_timestamp):
    """Run the verify check across a resolution ladder; CSV-friendly."""
    _emit("sweep", example, out, fmt, grid=grid, trials=trials, seed=seed,
          p=p, no_timestamp=no_timestamp)


if __name__ == "__main__":
    main()
