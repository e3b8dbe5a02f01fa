"""Shared record of acceptance outcomes, reported at the end of the session."""
RESULTS = {}
