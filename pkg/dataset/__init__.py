# dataset/__init__.py
"""
Construction du corpus de paires et évaluation des traductions.
"""
