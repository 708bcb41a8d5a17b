"""Super-Liouville numerics."""
