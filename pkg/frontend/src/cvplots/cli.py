"""Command line entry point: render --figure <id> --csv <path> --out <path>."""

import sys

import click

from .figures import FIGURE_IDS, SchemaError, render


@click.command()
@click.option("--figure", "figure_id", required=True,
              type=click.Choice(FIGURE_IDS),
              help="figure id to render")
@click.option("--csv", "csv_path", required=True, type=click.Path(),
              help="input CSV produced by the simulator")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="output image path (extension selects the format)")
def main(figure_id, csv_path, out_path):
    """Render one figure from a simulator CSV table."""
    try:
        out = render(figure_id, csv_path, out_path)
    except SchemaError as exc:
        click.echo(f"schema error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
