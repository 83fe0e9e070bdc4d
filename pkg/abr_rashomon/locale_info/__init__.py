"""User-facing strings for abr_rashomon, marked for translation."""
