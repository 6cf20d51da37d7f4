"""Pacote de testes do laboratório."""