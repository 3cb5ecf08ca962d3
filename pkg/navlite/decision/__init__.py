"""Controlador DECISION e baselines"""
