"""
Desk-scale simulator for classical communication over a memoryless quantum
channel with classical feedback: protocol engine, directed-information
converse chain, double-blocked achievability machinery and a CLI harness.
"""

__version__ = "0.3.0"
