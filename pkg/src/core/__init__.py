# Risk-attitude math: utilities, lotteries, estimation, portfolio weights
