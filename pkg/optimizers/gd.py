from optimizers.optimizer import Optimizer
from store import register_optimizer


@register_optimizer("gd")
class GradientDescent(Optimizer):
    """
    Plain gradient descent with a constant learning rate
    """

    def __init__(self, learning_rate):
        super(GradientDescent, self).__init__(learning_rate)
        self.name = "GradientDescent"

    def step(self, params, grads):
        return params - self.learning_rate * grads
