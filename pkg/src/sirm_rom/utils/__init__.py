"""Utilities and helpers."""
