"""Linha de comando: presets, manifesto, configuração por ambiente e rastreamento."""
