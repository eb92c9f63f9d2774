class Optimizer:
    def __init__(self, learning_rate):
        """
        Initialize the optimizer, add a name which is used to register the optimizer
        """
        if learning_rate <= 0:
            raise ValueError(f"Learning rate must be positive, got {learning_rate}")
        self.name = "DummyOptimizer"
        self.learning_rate = learning_rate

    def __str__(self) -> str:
        return self.name

    def step(self, params, grads):
        """
        One update of the trainable parameters, called once per fine-tuning step.
        Extend this method to implement your own update rule.

        Parameters
        ----------
        params : numpy.ndarray
            Current parameter vector, in ``Circuit.parameters()`` order.
        grads : numpy.ndarray
            Gradient of the loss at ``params``.

        Returns
        -------
        numpy.ndarray
            The updated parameter vector (a new array).
        """
        raise NotImplementedError
