"""Human-readable exports of decision trees."""
