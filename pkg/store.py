OPTIMIZER_REGISTRY = {}
REDUCTION_REGISTRY = {}
CHECK_REGISTRY = {}


def _registrar(registry, kind):
    # define decorator for registering named plugins
    def register(name=""):
        def decorator(func):
            if name not in registry:
                registry[name] = func
            else:
                raise AssertionError(f"{kind} {registry[name]} is already registered.")
            return func

        return decorator

    return register


register_optimizer = _registrar(OPTIMIZER_REGISTRY, "Optimizer")
register_reduction = _registrar(REDUCTION_REGISTRY, "Reduction strategy")
register_check = _registrar(CHECK_REGISTRY, "Check")
