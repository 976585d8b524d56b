"""
Terminal presentation: rich theme, formatters and shell screens.
"""
