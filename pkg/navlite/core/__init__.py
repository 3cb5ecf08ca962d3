"""Core module - configuracao, erros e logging do NAVLITE"""
