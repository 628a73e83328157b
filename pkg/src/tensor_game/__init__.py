"""Executable augmented tensor code test and its soundness machinery."""
