"""Pivot-rule workbench: strategy improvement, policy iteration and simplex
under one pivot-rule framework, plus adversarial instance generators."""

__version__ = "0.1.0"
