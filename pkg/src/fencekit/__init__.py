"""Preprocessing defenses against adversarial examples, and the attacks that test them."""

__version__ = "0.1.0"
