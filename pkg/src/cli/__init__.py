"""Command-line sub-commands and run manifests."""
