"""
Common building blocks shared by the numerical tools and the command line
"""
