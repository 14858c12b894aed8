"""Command-line interface: run, prove, attack, report and zoo."""

from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

import click

from .automata import PostselectionUndefined
from .exactnum import DomainError, format_rational, parse_rational
from .harness import MaMachine, VerificationClaim, adversarial_max, check_claim, run_ma, word_text
from .io import DocumentError, dumps, parse_machine
from .zoo import get_construction, names
from .zoo.common import Construction


def _parse_word(text: str) -> tuple:
    """Plain strings split per character; comma-separated text keeps multi-character symbols."""
    if "," in text:
        return tuple(s for s in text.split(",") if s)
    return tuple(text)


def _load(spec: str) -> tuple[MaMachine, Optional[Construction]]:
    path = Path(spec)
    if path.suffix == ".json" or path.is_file():
        try:
            return parse_machine(path.read_text(encoding="utf-8")), None
        except (OSError, DocumentError) as e:
            raise click.ClickException(f"cannot load {spec}: {e}")
    try:
        cons = get_construction(spec)
    except KeyError as e:
        raise click.ClickException(str(e.args[0]))
    return cons.machine, cons


def _decimal(q: Fraction, digits: int) -> str:
    return f"{float(q):.{digits}g}"


def _print_probs(acc, rej, digits: int) -> None:
    click.echo(f"Acc = {format_rational(acc)}")
    click.echo(f"Rej = {format_rational(rej)}")
    if digits > 0:
        click.echo(f"Acc ~ {_decimal(acc, digits)} (approximate)")


machine_opt = click.option("--machine", "-m", required=True, help="Registered construction name or a machine JSON file.")
digits_opt = click.option("--digits", default=12, show_default=True, help="Digits of the approximate decimal rendering (0 hides it).")


@click.group()
def main():
    """Exact simulation and adversarial checking of Merlin-Arthur finite automata."""


@main.command()
@machine_opt
@click.option("--cert", "-c", default="", help="Certificate (comma-separate multi-character symbols).")
@click.option("--input", "-x", "input_", default="", help="Input word.")
@digits_opt
def run(machine, cert, input_, digits):
    """Print the exact acceptance of one certificate on one input."""
    m, _ = _load(machine)
    try:
        r = run_ma(m, _parse_word(cert), _parse_word(input_))
    except PostselectionUndefined as e:
        raise click.ClickException(f"postselection undefined: {e}")
    except (DomainError, ValueError) as e:
        raise click.ClickException(str(e))
    _print_probs(r.acc, r.rej, digits)


@main.command()
@machine_opt
@click.option("--input", "-x", "input_", default="", help="Input word.")
@digits_opt
def prove(machine, input_, digits):
    """Ask the honest prover for a certificate and run it."""
    m, cons = _load(machine)
    if cons is None:
        raise click.ClickException("proving needs a registered construction (machine files carry no prover)")
    x = _parse_word(input_)
    cert = cons.prover(x)
    if cert is None:
        click.echo("no certificate: the input is not in the language")
        sys.exit(1)
    click.echo(f"certificate = {word_text(cert)}")
    click.echo(f"length = {len(cert)}")
    r = run_ma(m, cert, x)
    _print_probs(r.acc, r.rej, digits)


@main.command()
@machine_opt
@click.option("--input", "-x", "input_", default="", help="Input word.")
@click.option("--max-cert", type=int, required=True, help="Largest certificate length searched.")
@click.option("--objective", type=click.Choice(["max-acc", "min-distance", "distance-to-half"]), default="max-acc",
              show_default=True)
@click.option("--lam", default="1/2", show_default=True, help="Target for min-distance.")
@digits_opt
def attack(machine, input_, max_cert, objective, lam, digits):
    """Exhaustive search for the most damaging certificate."""
    m, _ = _load(machine)
    try:
        res = adversarial_max(m, _parse_word(input_), max_cert, objective, parse_rational(lam))
    except (DomainError, ValueError) as e:
        raise click.ClickException(str(e))
    click.echo(f"explored = {res.explored}")
    if res.undefined:
        click.echo(f"undefined = {res.undefined}")
    if res.best_cert is None:
        click.echo("no certificate with defined acceptance")
        sys.exit(1)
    click.echo(f"best certificate = {word_text(res.best_cert) or '(empty)'}")
    click.echo(f"Acc = {format_rational(res.best_acc)}")
    if objective != "max-acc":
        click.echo(f"distance = {format_rational(res.best_value)}")
    if digits > 0:
        click.echo(f"Acc ~ {_decimal(res.best_acc, digits)} (approximate)")


@main.command()
@machine_opt
@click.option("--claim", "claim_text", default=None,
              help="exact, cutpoint:P, two-sided:P or bounded:EPS (default: the construction's own claim).")
@click.option("--max-n", type=int, required=True, help="Check every input up to this length.")
@click.option("--max-cert", type=int, default=None, help="Certificate bound (default depends on the machine).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the JSON report here.")
def report(machine, claim_text, max_n, max_cert, out):
    """Check a verification claim on all short inputs; exit status 1 when a counterexample exists."""
    m, cons = _load(machine)
    if cons is None:
        raise click.ClickException("reports need a registered construction (membership and prover)")
    try:
        claim = cons.claim if claim_text is None else VerificationClaim.parse(claim_text)
    except (DomainError, ValueError) as e:
        raise click.ClickException(str(e))
    rep = check_claim(m, claim, cons.member, max_n, max_cert, cons.prover)
    text = rep.dumps()
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)
    bad = rep.counterexamples
    click.echo(f"{'pass' if not bad else 'FAIL'}: {len(rep.rows)} inputs, {len(bad)} counterexamples", err=True)
    sys.exit(0 if not bad else 1)


@main.group()
def zoo():
    """Registered constructions."""


@zoo.command("list")
def zoo_list():
    for n in names():
        click.echo(n)


@zoo.command("export")
@click.argument("name")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def zoo_export(name, out):
    """Write a construction's machine as JSON."""
    m, cons = _load(name)
    text = dumps(m, cons.description if cons else "")
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


if __name__ == "__main__":
    main()
