import numpy as np

from optimizers.optimizer import Optimizer
from store import register_optimizer


@register_optimizer("momentum")
class Momentum(Optimizer):
    """
    Heavy-ball momentum.
    """

    def __init__(self, learning_rate, beta=0.9):
        super(Momentum, self).__init__(learning_rate)
        self.name = "Momentum"
        self.beta = beta
        self.velocity = None

    def step(self, params, grads):
        if self.velocity is None:
            self.velocity = np.zeros_like(params)
        self.velocity = self.beta * self.velocity + grads
        return params - self.learning_rate * self.velocity
