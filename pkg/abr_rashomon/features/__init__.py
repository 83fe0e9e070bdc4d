"""Feature binarization and reference-ensemble column elimination."""
