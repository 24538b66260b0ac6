# dataset/services/__init__.py
"""
Services métier du module dataset.
"""
