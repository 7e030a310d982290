"""Inference of the connection probability in mean-field Hawkes networks."""
