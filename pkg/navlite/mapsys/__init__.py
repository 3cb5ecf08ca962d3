"""Mapas leves - plantas, saidas, grafo topologico e rede viaria"""
