# Risk Attitude
# Arrow-Pratt risk measures for non-fair lotteries and market data
__version__ = "0.1.0"
