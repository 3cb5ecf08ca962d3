"""Metricas, relatorios e experimentos"""
