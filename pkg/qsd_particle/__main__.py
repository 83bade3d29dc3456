"""Allows `python -m qsd_particle`."""

from qsd_particle.app import main

main()
