from abr_rashomon.localize import _L

PIPELINE_CONFIG_FIELD_DESCRIPTIONS = {
    "teacher": _L("Policy to distill: bba, robustmpc, mpc, constant:<level> or tree:<path>."),
    "train_traces": _L("Directory of training traces (one `seconds bandwidth_mbps` file per trace)."),
    "test_traces": _L("Directory of held-out traces used by the evaluation stage. Optional."),
    "manifest_path": _L("Video manifest JSON. The built-in six-level ladder is used when unset."),
    "output_dir": _L("Directory that receives every stage's artifacts and the pipeline manifest."),
    "seed": _L("Global seed; each stage derives its own seed from it and the stage name."),
    "max_iterations": _L("Teacher-student iterations after the initial teacher rollout."),
    "max_depth": _L("Maximum depth of the optimal tree and of every tree in the Rashomon set."),
    "lambda_": _L("Per-leaf penalty in the sparsity objective."),
    "epsilon": _L("Relative slack above the optimal objective that still counts as near-optimal."),
    "delta": _L("Importance below which binary columns are dropped during column elimination."),
    "instances": _L("Number of near-optimal trees entered into the comprehensibility tournament."),
    "rashomon_cap": _L("Abort enumeration when more near-optimal trees than this qualify."),
    "max_thresholds_per_feature": _L("Upper bound on the binary columns generated per raw feature."),
    "eliminate": _L("Run importance-guided column elimination before building trees."),
    "buffer_cap_s": _L("Player buffer capacity in seconds."),
    "baselines": _L("Policies the evaluation stage compares the trees against."),
    "baseline": _L("Policy whose mean QoE the improvement columns are relative to."),
    "metric": _L("QoE metric for evaluation: lin or hd."),
    "judge": _L("Comprehensibility judge settings (backends, few_shot, self_consistency, max_in_flight)."),
    "openai_base_url": _L("Override for the OpenAI-compatible endpoint. The API key is read from OPENAI_API_KEY."),
    "anthropic_base_url": _L("Override for the Anthropic endpoint. The API key is read from ANTHROPIC_API_KEY."),
}
