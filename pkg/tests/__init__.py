# Test package for the stochastic-order game toolkit
