"""Generators for adversarial lower-bound instances."""
