"""Learned predictors: viewpoint (GRU), moving direction (LSTM), LoS status (CNN)."""
