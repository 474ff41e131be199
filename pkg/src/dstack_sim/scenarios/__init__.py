"""Scenario and kernel-instance files shipped with the package."""
