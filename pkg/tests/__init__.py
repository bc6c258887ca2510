"""Test package for SIRM-ROM."""
