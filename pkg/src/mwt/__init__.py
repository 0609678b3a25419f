"""Multiwavelet filter banks, transforms and a multiwavelet neural operator."""
