"""Boundary-element simulator for quasistatic delamination of linear
elastic bodies joined by a damageable, plastically slipping adhesive."""

__version__ = "0.1.0"
