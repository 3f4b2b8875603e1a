"""
Shared configuration and logging core for the band-density toolkit.
"""
