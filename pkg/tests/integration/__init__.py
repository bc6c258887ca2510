"""Benchmark acceptance tests for SIRM-ROM."""
