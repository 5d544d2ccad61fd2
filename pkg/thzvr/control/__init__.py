"""RIS phase-shift control: C-DQN agent, action codebook and baselines."""
