"""Intencoes discretas (DLM) e imagens de caminho local (LPE)"""
