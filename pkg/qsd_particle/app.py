"""
Command-Line Application Entry Point
====================================

This is the main click application.

Responsibilities:
- Create the `qsd-particle` command group
- Configure logging once (stderr, --verbose for DEBUG)
- Register every command module
"""

import logging
import sys

import click

from qsd_particle.commands import ALL_COMMANDS

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


@click.group(context_settings={'help_option_names': ['-h', '--help']})
@click.option('-v', '--verbose', is_flag=True, help='Debug logging.')
@click.version_option(package_name='qsd-particle')
def cli(verbose):
    """Non-failable particle approximation of conditioned Markov chains."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


# Register commands
for command in ALL_COMMANDS:
    cli.add_command(command)


def main():
    """Console-script entry point."""
    cli(prog_name='qsd-particle')


if __name__ == "__main__":
    main()
