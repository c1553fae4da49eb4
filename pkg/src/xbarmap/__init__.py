"""Map spiking neural networks onto memristor crossbar inventories with exact 0/1 ILPs."""

__version__ = "0.1.0"
