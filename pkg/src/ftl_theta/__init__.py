"""Theta-method follow-the-leader particle scheme for 1D scalar conservation laws."""
