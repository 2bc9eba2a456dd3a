"""Linear-time kernel tests of relative goodness of fit."""
