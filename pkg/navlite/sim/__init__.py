"""Simulador 2D, especialista e episodios"""
