# core/__init__.py
"""
Module core : lecture du G-code, découpage en couches et transformations.
"""
