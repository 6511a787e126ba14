from . import bench, crossval, curve, evaluate, predict, synth, train, tune  # noqa: F401
