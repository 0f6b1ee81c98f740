#-*- coding: utf-8 -*-


class Error(Exception):

    """Generic exception"""

    pass


class ConfigError(Error):

    """Invalid configuration, preset or command line option"""

    pass


class DataError(Error):

    """Malformed or insufficient auction data"""

    pass


class NumericalError(Error):

    """Numerical failure: non-PSD matrix, singular system, bad draw"""

    pass


class ConvergenceError(NumericalError):

    """Root finding or Newton-Raphson did not converge"""

    pass
