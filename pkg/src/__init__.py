# Stochastic-order game toolkit: distribution-valued security games and risk reports
__version__ = "1.0.0"
