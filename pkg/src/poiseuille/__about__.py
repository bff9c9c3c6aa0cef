__title__ = "Poiseuille Enhanced Dissipation"
__version__ = "0.1.0"
__author__ = "The poiseuille developers"
__license__ = "Apache"
__copywrite__ = "Copyright (C) 2026 The poiseuille developers"
__status__ = "Development"
