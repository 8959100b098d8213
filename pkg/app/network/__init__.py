"""Operator network and its dense numerical kernel."""
