# extrusion/__init__.py
"""
Conversion entre extrusion cumulée et relative.
"""
