"""Planejamento em grade e topologico"""
