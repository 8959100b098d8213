"""Binary dataset and checkpoint formats, JSON reports."""
