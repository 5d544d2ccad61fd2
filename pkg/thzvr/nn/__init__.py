"""Small numpy neural-network toolkit: layers, recurrent cells, losses, optimizers."""
from thzvr.nn.gradcheck import GradCheckReport, grad_check
from thzvr.nn.models import ConvNet, MLP, Model, RecurrentNet
from thzvr.nn.optim import SGD, Adam, adam_step, make_optimizer, sgd_step
from thzvr.nn.params import ParameterTree

__all__ = [
    "Adam", "ConvNet", "GradCheckReport", "MLP", "Model", "ParameterTree",
    "RecurrentNet", "SGD", "adam_step", "grad_check", "make_optimizer", "sgd_step",
]
