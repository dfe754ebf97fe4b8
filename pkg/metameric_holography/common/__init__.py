"""
Display model, perception model, losses, optimiser and shared utilities.
"""
