"""Simulator for quantum X-secure, B-Byzantine, T-colluding private information retrieval."""
