# utils/__init__.py
"""
Module utils contenant les utilitaires partagés de la boîte à outils.
"""
