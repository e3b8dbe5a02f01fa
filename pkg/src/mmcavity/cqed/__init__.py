"""Cavity-QED figures of merit and iSWAP gate simulation."""
