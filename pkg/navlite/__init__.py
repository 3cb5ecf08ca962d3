"""
NAVLITE - Navegacao hierarquica com mapas leves

Mapa topometrico de plantas baixas, planejamento em dois niveis,
intencoes discretas e controlador DECISION com memoria multimodal.
"""

__version__ = "0.1.0"
__author__ = "NAVLITE Team"
