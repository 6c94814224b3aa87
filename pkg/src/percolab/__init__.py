"""Bond percolation on finite vertex-transitive graphs."""
