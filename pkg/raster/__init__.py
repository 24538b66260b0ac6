# raster/__init__.py
"""
Rendu des couches, IoU et exports image.
"""
