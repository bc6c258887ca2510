"""Unit tests for SIRM-ROM."""
