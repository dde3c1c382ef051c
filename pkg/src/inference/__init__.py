"""Counter-based random streams and Dirichlet mode posteriors."""
