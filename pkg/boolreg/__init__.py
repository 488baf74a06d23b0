# round to the next integer when releasing
__version__ = "0.4"
