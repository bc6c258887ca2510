"""SIRM-ROM source package."""
