"""Salidas del sistema."""
