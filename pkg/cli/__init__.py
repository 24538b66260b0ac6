# cli/__init__.py
"""
Interface en ligne de commande.
"""
