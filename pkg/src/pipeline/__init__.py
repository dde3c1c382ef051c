"""Per-epoch orchestration of shadow matching, mixtures and selection."""
