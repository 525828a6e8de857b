"""trojanlab: plant, detect, and retrain away backdoors in small CNN classifiers."""

__version__ = "0.1.0"
