"""Teacher-student dataset construction."""
