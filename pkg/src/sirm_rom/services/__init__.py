"""Iteration services: global SIRM, DIRM, local SIRM and the experiment runner."""
