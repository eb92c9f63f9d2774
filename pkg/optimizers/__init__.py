from .optimizer import Optimizer
from .gd import GradientDescent
from .momentum import Momentum
from .adam import Adam
