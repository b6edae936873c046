"""HTTP blueprints: service status, model analysis and experiment results."""
