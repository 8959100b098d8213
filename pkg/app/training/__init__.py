"""Training protocol, metrics, optimizer and the train pipeline."""
