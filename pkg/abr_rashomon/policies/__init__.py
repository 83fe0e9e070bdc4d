"""Built-in ABR policies (teachers and baselines) and the decision-tree policy."""
