"""Toy task: the evaluator scores the value of VALUE."""

# EVOLVE-BLOCK-START
VALUE = 0
# EVOLVE-BLOCK-END
