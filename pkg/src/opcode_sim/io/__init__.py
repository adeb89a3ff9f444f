"""Input/Output modules."""
