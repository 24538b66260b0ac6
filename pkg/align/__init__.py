# align/__init__.py
"""
Appariement de contours et découpe en paires de segments.
"""
