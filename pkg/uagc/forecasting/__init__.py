"""
Biblioteca do pipeline UAGC: grafo viário, geração de trajetos, adjacência de
sensores, atividade urbana, motor de diferenciação e previsores de velocidade.

Este pacote não depende do Django; o app `core` o orquestra.
"""
