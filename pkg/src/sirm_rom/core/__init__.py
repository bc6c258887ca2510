"""Core system modules: configuration and exceptions."""
