"""Full-order dynamical systems and the benchmark discretizations."""
