"""
Numerical library: quadrature, mixing laws, limit laws, exact laws, samplers, distances and checks
"""
