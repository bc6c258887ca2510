"""Handler modules for SIRM-ROM."""
