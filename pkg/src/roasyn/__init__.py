"""roasyn: certified region-of-attraction synthesis for partially unknown systems.

The package learns a polynomial surrogate of a control-affine system
(Chebyshev interpolation of declared non-polynomial terms plus Gaussian
process residual models) and then synthesises a polynomial controller,
control Lyapunov function and control barrier function by sum-of-squares
programming, maximising a volume surrogate of the certified region while
excluding user-declared unsafe sets.  Monte-Carlo simulation against the
original dynamics closes the loop.
"""

__version__ = "0.1.0"
